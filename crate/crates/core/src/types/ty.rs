use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::lang::{Node, NodeKind};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Prim {
    Int,
    Long,
    Double,
    Boolean,
    String,
    Unit,
}

impl Prim {
    pub const ALL: [Prim; 6] = [Prim::Int, Prim::Long, Prim::Double, Prim::Boolean, Prim::String, Prim::Unit];

    pub fn name(self) -> &'static str {
        match self {
            Prim::Int => "Int",
            Prim::Long => "Long",
            Prim::Double => "Double",
            Prim::Boolean => "Boolean",
            Prim::String => "String",
            Prim::Unit => "Unit",
        }
    }

    pub fn from_name(s: &str) -> Option<Prim> {
        Prim::ALL.into_iter().find(|p| p.name() == s)
    }
}

/// A TL type. Class types are referenced by declaration name, which is
/// unique per program.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Type {
    Prim(Prim),
    Any,
    Class(String, Vec<Type>),
    Param(String),
    Func(Vec<Type>, Box<Type>),
}

impl Type {
    pub const INT: Type = Type::Prim(Prim::Int);
    pub const LONG: Type = Type::Prim(Prim::Long);
    pub const DOUBLE: Type = Type::Prim(Prim::Double);
    pub const BOOLEAN: Type = Type::Prim(Prim::Boolean);
    pub const STRING: Type = Type::Prim(Prim::String);
    pub const UNIT: Type = Type::Prim(Prim::Unit);

    pub fn class(name: &str, args: Vec<Type>) -> Type {
        Type::Class(name.to_string(), args)
    }

    pub fn list(elem: Type) -> Type {
        Type::Class("List".into(), vec![elem])
    }

    pub fn int_range() -> Type {
        Type::Class("IntRange".into(), vec![])
    }

    pub fn as_prim(&self) -> Option<Prim> {
        match self {
            Type::Prim(p) => Some(*p),
            _ => None,
        }
    }

    /// Declaration name whose members this type exposes.
    pub fn decl_name(&self) -> Option<&str> {
        match self {
            Type::Prim(p) => Some(p.name()),
            Type::Any => Some("Any"),
            Type::Class(n, _) => Some(n),
            _ => None,
        }
    }

    pub fn subst(&self, map: &HashMap<String, Type>) -> Type {
        if map.is_empty() {
            return self.clone();
        }
        match self {
            Type::Param(n) => map.get(n).cloned().unwrap_or_else(|| self.clone()),
            Type::Class(n, args) => Type::Class(n.clone(), args.iter().map(|a| a.subst(map)).collect()),
            Type::Func(ps, r) => Type::Func(ps.iter().map(|a| a.subst(map)).collect(), Box::new(r.subst(map))),
            _ => self.clone(),
        }
    }

    pub fn mentions_param(&self) -> bool {
        match self {
            Type::Param(_) => true,
            Type::Class(_, args) => args.iter().any(Type::mentions_param),
            Type::Func(ps, r) => ps.iter().any(Type::mentions_param) || r.mentions_param(),
            _ => false,
        }
    }

    /// Nesting depth of type arguments (`Int` is 0, `List<Int>` is 1).
    pub fn nesting(&self) -> usize {
        match self {
            Type::Class(_, args) if !args.is_empty() => 1 + args.iter().map(Type::nesting).max().unwrap_or(0),
            Type::Func(ps, r) => 1 + ps.iter().chain(std::iter::once(&**r)).map(Type::nesting).max().unwrap_or(0),
            _ => 0,
        }
    }

    /// Syntax node spelling this type.
    pub fn to_node(&self) -> Node {
        match self {
            Type::Prim(p) => Node::type_ref(p.name(), vec![]),
            Type::Any => Node::type_ref("Any", vec![]),
            Type::Param(n) => Node::type_ref(n.clone(), vec![]),
            Type::Class(n, args) => Node::type_ref(n.clone(), args.iter().map(Type::to_node).collect()),
            Type::Func(ps, r) => {
                let mut kids: Vec<Node> = ps.iter().map(Type::to_node).collect();
                kids.push(r.to_node());
                Node::type_ref("->", kids)
            }
        }
    }
}

impl fmt::Display for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn list(f: &mut fmt::Formatter<'_>, ts: &[Type]) -> fmt::Result {
            for (i, t) in ts.iter().enumerate() {
                if i > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{t}")?;
            }
            Ok(())
        }
        match self {
            Type::Prim(p) => write!(f, "{}", p.name()),
            Type::Any => write!(f, "Any"),
            Type::Param(n) => write!(f, "{n}"),
            Type::Class(n, args) => {
                write!(f, "{n}")?;
                if !args.is_empty() {
                    write!(f, "<")?;
                    list(f, args)?;
                    write!(f, ">")?;
                }
                Ok(())
            }
            Type::Func(ps, r) => {
                write!(f, "(")?;
                list(f, ps)?;
                write!(f, ") -> {r}")
            }
        }
    }
}

/// Reads a `TypeRef` node without consulting declarations: uppercase names
/// that are not primitives become class types unless listed in `params`.
pub fn type_from_node(n: &Node, params: &[String]) -> Type {
    debug_assert_eq!(n.kind, NodeKind::TypeRef);
    if n.text == "->" {
        let (r, ps) = n.children.split_last().expect("function type has a return type");
        return Type::Func(ps.iter().map(|p| type_from_node(p, params)).collect(), Box::new(type_from_node(r, params)));
    }
    if let Some(p) = Prim::from_name(&n.text) {
        return Type::Prim(p);
    }
    if n.text == "Any" {
        return Type::Any;
    }
    if params.contains(&n.text) {
        return Type::Param(n.text.clone());
    }
    Type::Class(n.text.clone(), n.children.iter().map(|c| type_from_node(c, params)).collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TypeParam {
    pub name: String,
    pub bound: Type,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn display_and_nodes_agree() {
        let t = Type::Func(vec![Type::list(Type::INT)], Box::new(Type::Param("T".into())));
        assert_eq!(t.to_string(), "(List<Int>) -> T");
        let back = type_from_node(&t.to_node(), &["T".to_string()]);
        assert_eq!(back, t);
    }

    #[test]
    fn substitution() {
        let mut m = HashMap::new();
        m.insert("T".to_string(), Type::INT);
        let t = Type::class("A", vec![Type::Param("T".into())]);
        assert_eq!(t.subst(&m), Type::class("A", vec![Type::INT]));
        assert_eq!(Type::class("A", vec![Type::list(Type::INT)]).nesting(), 2);
    }
}
