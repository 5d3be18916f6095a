//! Extraction of the returns section from a raw docstring.
//!
//! Three conventions are recognised:
//!
//! * numpydoc-style underlined headings (`Returns` followed by `-------`),
//! * reST field lines `:returns:` / `:return:`,
//! * reST field lines `:rtype:`.
//!
//! Anything else yields an empty string.

const UNDERLINE_CHARS: [char; 4] = ['-', '=', '~', '^'];

fn indent_of(line: &str) -> usize {
    line.len() - line.trim_start().len()
}

/// Equivalent of `inspect.cleandoc`: tabs expanded, the common indentation
/// of all lines after the first removed, surrounding blank lines dropped.
fn clean_lines(docstring: &str) -> Vec<String> {
    let lines: Vec<String> = docstring.replace('\t', "        ").lines().map(str::to_owned).collect();
    let margin = lines
        .iter()
        .skip(1)
        .filter(|l| !l.trim().is_empty())
        .map(|l| indent_of(l))
        .min()
        .unwrap_or(0);
    let mut out: Vec<String> = lines
        .iter()
        .enumerate()
        .map(|(i, l)| {
            if i == 0 {
                l.trim_start().to_owned()
            } else if l.len() >= margin {
                l[margin..].trim_end().to_owned()
            } else {
                l.trim().to_owned()
            }
        })
        .collect();
    while out.last().is_some_and(|l| l.trim().is_empty()) {
        out.pop();
    }
    let leading = out.iter().take_while(|l| l.trim().is_empty()).count();
    out.drain(..leading);
    out
}

fn is_underline(line: &str) -> bool {
    let t = line.trim();
    t.len() >= 3 && UNDERLINE_CHARS.iter().any(|&c| t.chars().all(|x| x == c))
}

/// A heading line: non-empty text directly followed by an underline.
fn is_heading(lines: &[String], i: usize) -> bool {
    let text = lines[i].trim();
    !text.is_empty() && !is_underline(text) && lines.get(i + 1).is_some_and(|next| is_underline(next))
}

fn is_returns_heading(lines: &[String], i: usize) -> bool {
    let text = lines[i].trim();
    (text.eq_ignore_ascii_case("returns") || text.eq_ignore_ascii_case("return")) && is_heading(lines, i)
}

/// `(marker, rest-of-line)` when the line opens a reST field.
fn field_marker(line: &str) -> Option<(&str, &str)> {
    let t = line.trim_start().strip_prefix(':')?;
    let end = t.find(':')?;
    let marker = &t[..end];
    if marker.is_empty() || marker.starts_with(' ') {
        return None;
    }
    Some((marker, t[end + 1..].trim()))
}

fn is_returns_field(marker: &str) -> bool {
    let name = marker.split_whitespace().next().unwrap_or("");
    matches!(name, "returns" | "return" | "rtype")
}

fn trim_block(mut block: Vec<String>) -> Vec<String> {
    while block.last().is_some_and(|l| l.trim().is_empty()) {
        block.pop();
    }
    while block.first().is_some_and(|l| l.trim().is_empty()) {
        block.remove(0);
    }
    block
}

pub fn parse_returns_section(docstring: &str) -> String {
    let lines = clean_lines(docstring);
    let mut pieces: Vec<String> = Vec::new();
    let mut i = 0;
    while i < lines.len() {
        if is_returns_heading(&lines, i) {
            let mut j = i + 2;
            let mut block = Vec::new();
            while j < lines.len() && !is_heading(&lines, j) && field_marker(&lines[j]).is_none() {
                block.push(lines[j].trim().to_owned());
                j += 1;
            }
            pieces.extend(trim_block(block));
            i = j;
            continue;
        }
        if let Some((marker, rest)) = field_marker(&lines[i]) {
            if is_returns_field(marker) {
                let base = indent_of(&lines[i]);
                let mut block = vec![rest.to_owned()];
                let mut j = i + 1;
                while j < lines.len() {
                    let l = &lines[j];
                    if !l.trim().is_empty() && indent_of(l) <= base {
                        break;
                    }
                    block.push(l.trim().to_owned());
                    j += 1;
                }
                pieces.extend(trim_block(block));
                i = j;
                continue;
            }
        }
        i += 1;
    }
    pieces.join("\n")
}

#[cfg(test)]
mod tests {
    use super::*;

    const READ_CSV_DOC: &str = "Read a comma-separated values (csv) file into DataFrame.

    Also supports optionally iterating or breaking of the file
    into chunks.

    Parameters
    ----------
    filepath_or_buffer : str, path object or file-like object
        Any valid string path is acceptable.
    sep : str, default ','
        Delimiter to use.

    Returns
    -------
    DataFrame or TextParser
        A comma-separated values (csv) file is returned as two-dimensional
        data structure with labeled axes.

    See Also
    --------
    DataFrame.to_csv : Write DataFrame to a comma-separated values (csv) file.
    read_fwf : Read a table of fixed-width formatted lines into DataFrame.
    ";

    #[test]
    fn numpydoc_section() {
        let text = parse_returns_section(READ_CSV_DOC);
        assert!(text.contains("DataFrame or TextParser"), "{text}");
        assert!(!text.contains("See Also"));
        assert!(!text.contains("to_csv"));
        assert!(!text.contains("Delimiter"));
    }

    #[test]
    fn empty_and_missing() {
        assert_eq!(parse_returns_section(""), "");
        let params_only = "Do a thing.\n\n    Parameters\n    ----------\n    x : int\n        The x.\n";
        assert_eq!(parse_returns_section(params_only), "");
    }

    #[test]
    fn rest_fields() {
        let doc = "Fetch rows.

        :param query: the query
        :type query: str
        :returns: the matching rows as a
            pandas DataFrame
        :rtype: DataFrame
        :raises ValueError: on bad input
        ";
        let text = parse_returns_section(doc);
        assert_eq!(text, "the matching rows as a\npandas DataFrame\nDataFrame");
    }

    #[test]
    fn return_singular_field() {
        assert_eq!(parse_returns_section(":return: bool"), "bool");
        assert_eq!(parse_returns_section("Check.\n\n:rtype: bool\n"), "bool");
    }

    #[test]
    fn malformed_heading_degrades() {
        // heading with no body, and an underline with no heading text
        assert_eq!(parse_returns_section("Returns\n-------\n"), "");
        assert_eq!(parse_returns_section("-------\nReturns\n"), "");
    }

    #[test]
    fn section_stops_at_next_heading() {
        let doc = "Returns\n-------\nint\n    count\nRaises\n------\nValueError\n";
        assert_eq!(parse_returns_section(doc), "int\ncount");
    }
}
