//! Python source to a per-function SSA IR.
//!
//! A method call `x.m(a)` lowers to a property read followed by a call, and
//! `from m import f` to an import of `m` followed by a property read of `f`,
//! so both import styles reach the analysis the same way.

mod ir;
mod lower;

pub use ir::*;
pub use lower::{enumerate_roots, parse_script};

use std::collections::BTreeSet;

/// Structural SSA check: every value is defined exactly once (by a
/// parameter or an instruction) and every use refers to a defined value.
pub fn check_ssa(func: &FunctionIR) -> Result<(), String> {
    let mut defined: BTreeSet<ValueId> = BTreeSet::new();
    for p in &func.params {
        if !defined.insert(*p) {
            return Err(format!("{} defines parameter {p} twice", func.name));
        }
    }
    for ins in func.instructions() {
        if let Some(t) = ins.target() {
            if !defined.insert(t) {
                return Err(format!("{} assigns {t} twice", func.name));
            }
            if t.0 == 0 || t.0 > func.value_count {
                return Err(format!("{} uses out-of-range value {t}", func.name));
            }
        }
    }
    for ins in func.instructions() {
        if let Some(u) = ins.uses().into_iter().find(|u| !defined.contains(u)) {
            return Err(format!("{}: `{ins}` reads undefined {u}", func.name));
        }
    }
    for block in &func.blocks {
        if let Some(s) = block.successors().into_iter().find(|s| s.0 as usize >= func.blocks.len()) {
            return Err(format!("{}: {} jumps to missing {s}", func.name, block.id));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn parse(src: &str) -> ScriptIR {
        let ir = parse_script(src, "test.py").unwrap();
        for f in &ir.functions {
            check_ssa(f).unwrap();
        }
        ir
    }

    fn calls(f: &FunctionIR) -> usize {
        f.instructions().filter(|i| matches!(i, Instruction::Call { .. })).count()
    }

    #[test]
    fn script1_top_level_shape() {
        let ir = parse(fixtures::SCRIPT_1);
        let top = ir.top_level();
        let ins: Vec<&Instruction> = top.instructions().collect();
        let import = ins.iter().find_map(|i| match i {
            Instruction::Import { target, module } if module == "pandas" => Some(*target),
            _ => None,
        });
        let import = import.expect("pandas import");
        assert!(ins.iter().any(|i| matches!(i, Instruction::FunctionCreate { function_index: 1, .. })));
        let read_csv = ins
            .iter()
            .find_map(|i| match i {
                Instruction::PropertyRead { target, object, property } if *object == import && property == "read_csv" => Some(*target),
                _ => None,
            })
            .expect("read_csv property read on the import");
        let call = ins
            .iter()
            .find_map(|i| match i {
                Instruction::Call { target, callee, .. } if *callee == read_csv => Some(*target),
                _ => None,
            })
            .expect("read_csv call");
        // massage_data is called with the read_csv result
        assert!(ins.iter().any(|i| matches!(i, Instruction::Call { args, .. } if args == &vec![call])));
        assert_eq!(ir.functions[1].name, "massage_data");
        assert_eq!(ir.functions[1].param_names, ["data"]);
    }

    #[test]
    fn script1_massage_data_has_join_phi() {
        let ir = parse(fixtures::SCRIPT_1);
        let f = ir.function_named("massage_data").unwrap();
        let phi = f.instructions().find_map(|i| match i {
            Instruction::Phi { inputs, .. } => Some(inputs.clone()),
            _ => None,
        });
        assert_eq!(phi.map(|p| p.len()), Some(2));
        let returned: Vec<_> = f.instructions().filter(|i| matches!(i, Instruction::Return { value: Some(_) })).collect();
        assert_eq!(returned.len(), 1);
        // dropna, drop, head and len
        assert_eq!(calls(f), 4);
    }

    #[test]
    fn single_constant() {
        let ir = parse("x = 1");
        assert_eq!(ir.functions.len(), 1);
        let ins: Vec<_> = ir.top_level().instructions().collect();
        assert_eq!(ins, [&Instruction::Const { target: ValueId(1), kind: ConstKind::Int }]);
    }

    #[test]
    fn import_alias_flows_to_call() {
        let ir = parse("import numpy as np\ny = np.mat(data)");
        let expected = vec![
            Instruction::Import { target: ValueId(1), module: "numpy".into() },
            Instruction::PropertyRead { target: ValueId(2), object: ValueId(1), property: "mat".into() },
            Instruction::LexicalRead { target: ValueId(3), name: "data".into() },
            Instruction::Call { target: ValueId(4), callee: ValueId(2), args: vec![ValueId(3)], keywords: vec![] },
        ];
        let ins: Vec<Instruction> = ir.top_level().instructions().cloned().collect();
        assert_eq!(ins, expected);
        assert_eq!(ir.top_level().bindings["y"], [ValueId(4)]);
    }

    #[test]
    fn from_import_is_import_plus_property() {
        let ir = parse("from pandas.io import parsers as p, read_csv\nread_csv(1)");
        let ins: Vec<Instruction> = ir.top_level().instructions().cloned().collect();
        assert_eq!(ins[0], Instruction::Import { target: ValueId(1), module: "pandas.io".into() });
        assert_eq!(
            ins[1],
            Instruction::PropertyRead { target: ValueId(2), object: ValueId(1), property: "parsers".into() }
        );
        assert_eq!(ir.top_level().bindings["p"], [ValueId(2)]);
        assert_eq!(ir.top_level().bindings["read_csv"], [ValueId(3)]);
    }

    #[test]
    fn dotted_import_binds_root() {
        let ir = parse("import os.path\nos.path.join('a')");
        let top = ir.top_level();
        assert!(matches!(top.instructions().next(), Some(Instruction::Import { module, .. }) if module == "os"));
        let callee = top
            .instructions()
            .find_map(|i| match i {
                Instruction::Call { callee, .. } => Some(*callee),
                _ => None,
            })
            .unwrap();
        let (root, chain) = top.property_chain(callee);
        assert_eq!(root, ValueId(1));
        assert_eq!(chain, ["path", "join"]);
    }

    #[test]
    fn roots_in_source_order() {
        let ir = parse("def a():\n    def b():\n        def c():\n            pass\n    return 1\ndef d():\n    pass\n");
        let names: Vec<&str> = enumerate_roots(&ir).iter().map(|f| f.name.as_str()).collect();
        assert_eq!(names, ["<module>", "a", "b", "c", "d"]);
        assert_eq!(ir.function_named("c").unwrap().parent, Some(2));
        assert_eq!(enumerate_roots(&parse("x = 1")).len(), 1);
    }

    #[test]
    fn three_nested_defs_four_roots() {
        let ir = parse("def f():\n    def g():\n        def h():\n            return 0\n        return h\n    return g\n");
        assert_eq!(enumerate_roots(&ir).len(), 4);
    }

    #[test]
    fn loop_header_phi_carries_back_edge() {
        let ir = parse("import pd\nx = pd.load()\nwhile x:\n    x = x.next()\nx.close()");
        let top = ir.top_level();
        let phi = top
            .instructions()
            .find_map(|i| match i {
                Instruction::Phi { target, inputs } => Some((*target, inputs.clone())),
                _ => None,
            })
            .unwrap();
        assert_eq!(phi.1.len(), 2, "entry value and back edge");
        // the close() receiver is the header phi
        let close_obj = top.instructions().find_map(|i| match i {
            Instruction::PropertyRead { object, property, .. } if property == "close" => Some(*object),
            _ => None,
        });
        assert_eq!(close_obj, Some(phi.0));
    }

    #[test]
    fn for_break_else() {
        let src = "for i in items:\n    if i:\n        y = i\n        break\n    z = i\nelse:\n    y = 0\nprint(y)";
        let ir = parse(src);
        assert!(ir.top_level().blocks.len() > 4);
    }

    #[test]
    fn skipped_constructs_are_counted() {
        let src = "class A:\n    def m(self):\n        pass\n@dec\ndef f():\n    pass\nfrom x import *\n";
        let ir = parse(src);
        assert_eq!(ir.warnings["class definition"], 1);
        assert_eq!(ir.warnings["decorator"], 1);
        assert_eq!(ir.warnings["star import"], 1);
        // methods of skipped classes are not roots
        assert_eq!(ir.functions.len(), 2);
    }

    #[test]
    fn syntax_error_names_path() {
        let err = parse_script("def (:\n", "bad.py").unwrap_err();
        assert!(matches!(&err, crate::Error::Parse { path, .. } if path == "bad.py"));
    }

    #[test]
    fn deterministic() {
        let a = parse(fixtures::SCRIPT_1);
        let b = parse(fixtures::SCRIPT_1);
        assert_eq!(a, b);
        assert_eq!(a.dump(), b.dump());
    }

    #[test]
    fn broad_syntax_stays_ssa() {
        let src = r#"
import a.b as ab
from .rel import thing
async def co(x, *args, k=ab.default(), **kw):
    async with ab.ctx() as c, other() as (d, e):
        await c.go()
    try:
        r = [v.m() for v in x if v]
    except ValueError as err:
        r = None
    finally:
        ab.done()
    match x:
        case 1:
            r = 1
        case _:
            pass
    while (n := ab.next()):
        if n:
            continue
        r += n
    g = lambda q: q.shape
    return {k: r, **kw} if r else (yield r)
x, *rest = thing.pair()
x.attr = 3
del x
global zz
assert x, "msg"
f"{ab.fmt()}"
s = x[1:2]
"#;
        let ir = parse(src);
        assert!(ir.functions.len() >= 3);
        assert!(ir.dump().contains("BB0:"));
    }
}
