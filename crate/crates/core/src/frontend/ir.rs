use std::collections::BTreeMap;
use std::fmt;

/// SSA value number, unique within one function. Numbering starts at 1.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ValueId(pub u32);

impl fmt::Display for ValueId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "v{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BlockId(pub u32);

impl fmt::Display for BlockId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BB{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ConstKind {
    None,
    Bool,
    Int,
    Float,
    Complex,
    Str,
    Bytes,
    Ellipsis,
    Tuple,
    /// Values the lowering does not model: slices, skipped class bodies.
    Other,
}

impl ConstKind {
    pub fn label(self) -> &'static str {
        match self {
            ConstKind::None => "None",
            ConstKind::Bool => "bool",
            ConstKind::Int => "int",
            ConstKind::Float => "float",
            ConstKind::Complex => "complex",
            ConstKind::Str => "str",
            ConstKind::Bytes => "bytes",
            ConstKind::Ellipsis => "Ellipsis",
            ConstKind::Tuple => "tuple",
            ConstKind::Other => "other",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Instruction {
    Import {
        target: ValueId,
        module: String,
    },
    PropertyRead {
        target: ValueId,
        object: ValueId,
        property: String,
    },
    /// `object[index]`, and the element read of a `for` loop or a
    /// destructuring assignment (`index` = None).
    Subscript {
        target: ValueId,
        object: ValueId,
        index: Option<ValueId>,
    },
    Call {
        target: ValueId,
        callee: ValueId,
        args: Vec<ValueId>,
        keywords: Vec<(String, ValueId)>,
    },
    FunctionCreate {
        target: ValueId,
        function_index: usize,
    },
    Phi {
        target: ValueId,
        inputs: Vec<ValueId>,
    },
    Return {
        value: Option<ValueId>,
    },
    Const {
        target: ValueId,
        kind: ConstKind,
    },
    /// A name not bound in the current function: resolved against the
    /// enclosing scopes' bindings, else a builtin.
    LexicalRead {
        target: ValueId,
        name: String,
    },
    /// Containers, arithmetic, boolean operators, conditional expressions,
    /// `await`: the result may be any of the operands.
    Operator {
        target: ValueId,
        op: &'static str,
        operands: Vec<ValueId>,
    },
}

impl Instruction {
    pub fn target(&self) -> Option<ValueId> {
        match self {
            Instruction::Import { target, .. }
            | Instruction::PropertyRead { target, .. }
            | Instruction::Subscript { target, .. }
            | Instruction::Call { target, .. }
            | Instruction::FunctionCreate { target, .. }
            | Instruction::Phi { target, .. }
            | Instruction::Const { target, .. }
            | Instruction::LexicalRead { target, .. }
            | Instruction::Operator { target, .. } => Some(*target),
            Instruction::Return { .. } => None,
        }
    }

    /// Values read by the instruction.
    pub fn uses(&self) -> Vec<ValueId> {
        match self {
            Instruction::PropertyRead { object, .. } => vec![*object],
            Instruction::Subscript { object, index, .. } => std::iter::once(*object).chain(*index).collect(),
            Instruction::Call { callee, args, keywords, .. } => std::iter::once(*callee)
                .chain(args.iter().copied())
                .chain(keywords.iter().map(|(_, v)| *v))
                .collect(),
            Instruction::Phi { inputs, .. } => inputs.clone(),
            Instruction::Return { value } => value.iter().copied().collect(),
            Instruction::Operator { operands, .. } => operands.clone(),
            _ => Vec::new(),
        }
    }
}

impl fmt::Display for Instruction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn list(values: &[ValueId]) -> String {
            values.iter().map(ToString::to_string).collect::<Vec<_>>().join(", ")
        }
        match self {
            Instruction::Import { target, module } => write!(f, "{target} = import {module}"),
            Instruction::PropertyRead { target, object, property } => {
                write!(f, "{target} = getfield {object}.{property}")
            }
            Instruction::Subscript { target, object, index: Some(i) } => write!(f, "{target} = subscript {object}[{i}]"),
            Instruction::Subscript { target, object, index: None } => write!(f, "{target} = element {object}"),
            Instruction::Call { target, callee, args, keywords } => {
                write!(f, "{target} = call {callee}({}", list(args))?;
                for (i, (k, v)) in keywords.iter().enumerate() {
                    let sep = if i == 0 && args.is_empty() { "" } else { ", " };
                    write!(f, "{sep}{k}={v}")?;
                }
                f.write_str(")")
            }
            Instruction::FunctionCreate { target, function_index } => write!(f, "{target} = function #{function_index}"),
            Instruction::Phi { target, inputs } => write!(f, "{target} = phi {}", list(inputs)),
            Instruction::Return { value: Some(v) } => write!(f, "return {v}"),
            Instruction::Return { value: None } => f.write_str("return"),
            Instruction::Const { target, kind } => write!(f, "{target} = const {}", kind.label()),
            Instruction::LexicalRead { target, name } => write!(f, "{target} = lexical {name}"),
            Instruction::Operator { target, op, operands } => write!(f, "{target} = {op} {}", list(operands)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Terminator {
    Jump(BlockId),
    Branch { cond: ValueId, then_block: BlockId, else_block: BlockId },
    Exit,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BasicBlock {
    pub id: BlockId,
    pub instructions: Vec<Instruction>,
    pub terminator: Terminator,
}

impl BasicBlock {
    pub fn successors(&self) -> Vec<BlockId> {
        match self.terminator {
            Terminator::Jump(b) => vec![b],
            Terminator::Branch { then_block, else_block, .. } => vec![then_block, else_block],
            Terminator::Exit => Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FunctionIR {
    pub name: String,
    pub index: usize,
    /// Lexically enclosing function; `None` only for the top level.
    pub parent: Option<usize>,
    pub params: Vec<ValueId>,
    pub param_names: Vec<String>,
    pub blocks: Vec<BasicBlock>,
    pub value_count: u32,
    /// Every SSA value ever bound to each local name.
    pub bindings: BTreeMap<String, Vec<ValueId>>,
}

impl FunctionIR {
    pub fn instructions(&self) -> impl Iterator<Item = &Instruction> {
        self.blocks.iter().flat_map(|b| b.instructions.iter())
    }

    /// The instruction defining `value`; `None` for parameters.
    pub fn def_site(&self, value: ValueId) -> Option<&Instruction> {
        self.instructions().find(|i| i.target() == Some(value))
    }

    pub fn is_param(&self, value: ValueId) -> bool {
        self.params.contains(&value)
    }

    pub fn param_name(&self, value: ValueId) -> Option<&str> {
        self.params.iter().position(|p| *p == value).map(|i| self.param_names[i].as_str())
    }

    /// Property names read between `value` and the nearest value that is not
    /// itself a property read, outermost first: for `pd.io.parsers.read_csv`
    /// this is `(pd, ["io", "parsers", "read_csv"])`.
    pub fn property_chain(&self, value: ValueId) -> (ValueId, Vec<String>) {
        let defs: BTreeMap<ValueId, &Instruction> =
            self.instructions().filter_map(|i| i.target().map(|t| (t, i))).collect();
        let mut chain = Vec::new();
        let mut current = value;
        while let Some(Instruction::PropertyRead { object, property, .. }) = defs.get(&current) {
            chain.push(property.clone());
            current = *object;
            if chain.len() > defs.len() {
                break;
            }
        }
        chain.reverse();
        (current, chain)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ScriptIR {
    pub source_path: String,
    /// Index 0 is the top level; nested functions follow in source order.
    pub functions: Vec<FunctionIR>,
    /// Skipped construct → occurrences.
    pub warnings: BTreeMap<String, usize>,
}

impl ScriptIR {
    pub fn top_level(&self) -> &FunctionIR {
        &self.functions[0]
    }

    pub fn function_named(&self, name: &str) -> Option<&FunctionIR> {
        self.functions.iter().find(|f| f.name == name)
    }

    /// Textual listing: one header per function, blocks `BB0..`, values `v1..`.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for func in &self.functions {
            out.push_str(&func.header());
            out.push('\n');
            for block in &func.blocks {
                out.push_str(&format!("  {}:\n", block.id));
                for ins in &block.instructions {
                    out.push_str(&format!("    {ins}\n"));
                }
                out.push_str(&format!("    {}\n", block.terminator_text()));
            }
        }
        out
    }
}

impl FunctionIR {
    pub fn header(&self) -> String {
        let params: Vec<String> =
            self.params.iter().zip(&self.param_names).map(|(v, n)| format!("{v}:{n}")).collect();
        match self.parent {
            Some(p) => format!("function #{} {}({}) parent #{p}", self.index, self.name, params.join(", ")),
            None => format!("function #{} {}({})", self.index, self.name, params.join(", ")),
        }
    }
}

impl BasicBlock {
    pub fn terminator_text(&self) -> String {
        match &self.terminator {
            Terminator::Jump(b) => format!("goto {b}"),
            Terminator::Branch { cond, then_block, else_block } => {
                format!("branch {cond} ? {then_block} : {else_block}")
            }
            Terminator::Exit => "exit".to_owned(),
        }
    }
}
