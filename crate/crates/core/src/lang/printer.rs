use super::lexer::quote;
use super::node::{Modifiers, Node, NodeId, NodeKind, SyntaxTree};

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("unfilled placeholder {id} of type {ty}")]
pub struct PrintError {
    pub id: NodeId,
    pub ty: String,
}

/// Canonical source text of `tree`. Fails on unfilled placeholders.
pub fn print(tree: &SyntaxTree) -> Result<String, PrintError> {
    let mut p = Printer { out: String::new(), indent: 0, holes: false };
    p.file(&tree.root)?;
    Ok(p.out)
}

/// Like [`print`], rendering placeholders as `[Type]`. The result is for
/// display only and does not parse.
pub fn print_skeleton(tree: &SyntaxTree) -> String {
    let mut p = Printer { out: String::new(), indent: 0, holes: true };
    p.file(&tree.root).expect("skeleton printing accepts holes");
    p.out
}

pub fn print_expr(node: &Node) -> Result<String, PrintError> {
    let mut p = Printer { out: String::new(), indent: 0, holes: false };
    p.expr(node, 0)?;
    Ok(p.out)
}

pub fn print_type(node: &Node) -> String {
    let mut p = Printer { out: String::new(), indent: 0, holes: true };
    p.ty(node);
    p.out
}

const PREC_UNARY: u8 = 9;
const PREC_ATOM: u8 = 11;

fn binary_prec(op: &str) -> u8 {
    match op {
        "||" => 1,
        "&&" => 2,
        "==" | "!=" => 3,
        "<" | ">" | "<=" | ">=" => 4,
        "until" | "downTo" => 5,
        ".." => 6,
        "+" | "-" => 7,
        _ => 8,
    }
}

fn prec(n: &Node) -> u8 {
    match n.kind {
        NodeKind::BinaryOp | NodeKind::RangeExpr => binary_prec(&n.text),
        NodeKind::UnaryOp => PREC_UNARY,
        NodeKind::IntLit | NodeKind::LongLit | NodeKind::DoubleLit if n.text.starts_with('-') => PREC_UNARY,
        _ => PREC_ATOM,
    }
}

struct Printer {
    out: String,
    indent: usize,
    holes: bool,
}

type R = Result<(), PrintError>;

impl Printer {
    fn w(&mut self, s: &str) {
        self.out.push_str(s);
    }

    fn line_start(&mut self) {
        for _ in 0..self.indent {
            self.out.push_str("    ");
        }
    }

    fn mods(&mut self, m: Modifiers) {
        for (md, kw) in Modifiers::KEYWORDS {
            if m.has(md) {
                self.w(kw);
                self.w(" ");
            }
        }
    }

    fn file(&mut self, root: &Node) -> R {
        for item in &root.children {
            self.line_start();
            self.item(item)?;
            self.w("\n");
        }
        Ok(())
    }

    fn item(&mut self, n: &Node) -> R {
        match n.kind {
            NodeKind::ClassDecl => self.class(n),
            NodeKind::InterfaceDecl => self.interface(n),
            NodeKind::FunDecl => self.fun(n),
            NodeKind::PropertyDecl => self.property(n),
            _ => self.stmt(n),
        }
    }

    fn type_params(&mut self, n: &Node) {
        let tps: Vec<&Node> = n.type_params().collect();
        if tps.is_empty() {
            return;
        }
        self.w("<");
        for (i, tp) in tps.iter().enumerate() {
            if i > 0 {
                self.w(", ");
            }
            self.w(&tp.text);
            if let Some(b) = tp.declared_type() {
                self.w(": ");
                self.ty(b);
            }
        }
        self.w(">");
    }

    fn params(&mut self, n: &Node) -> R {
        let ps: Vec<&Node> = n.params().collect();
        for (i, p) in ps.iter().enumerate() {
            if i > 0 {
                self.w(", ");
            }
            self.mods(p.mods);
            if p.mods.has(Modifiers::VAL) {
                self.w("val ");
            } else if p.mods.has(Modifiers::VAR) {
                self.w("var ");
            }
            self.w(&p.text);
            self.w(": ");
            if let Some(t) = p.declared_type() {
                self.ty(t);
            }
            if let Some(d) = p.initializer() {
                self.w(" = ");
                self.expr(d, 0)?;
            }
        }
        Ok(())
    }

    fn members(&mut self, n: &Node) -> R {
        let ms: Vec<&Node> = n.members().collect();
        if ms.is_empty() {
            return Ok(());
        }
        self.w(" {\n");
        self.indent += 1;
        for m in ms {
            self.line_start();
            self.item(m)?;
            self.w("\n");
        }
        self.indent -= 1;
        self.line_start();
        self.w("}");
        Ok(())
    }

    fn class(&mut self, n: &Node) -> R {
        self.mods(n.mods);
        self.w("class ");
        self.w(&n.text);
        self.type_params(n);
        if n.params().next().is_some() {
            self.w("(");
            self.params(n)?;
            self.w(")");
        }
        let supers: Vec<&Node> = n
            .children
            .iter()
            .filter(|c| matches!(c.kind, NodeKind::ConstructorCall | NodeKind::TypeRef))
            .collect();
        for (i, s) in supers.iter().enumerate() {
            self.w(if i == 0 { " : " } else { ", " });
            if s.kind == NodeKind::ConstructorCall {
                self.call_like(&s.text, s, 0)?;
            } else {
                self.ty(s);
            }
        }
        self.members(n)
    }

    fn interface(&mut self, n: &Node) -> R {
        self.mods(n.mods);
        self.w("interface ");
        self.w(&n.text);
        self.type_params(n);
        for (i, s) in n.super_interfaces().enumerate() {
            self.w(if i == 0 { " : " } else { ", " });
            self.ty(s);
        }
        self.members(n)
    }

    fn fun(&mut self, n: &Node) -> R {
        self.mods(n.mods);
        self.w("fun ");
        if n.type_params().next().is_some() {
            self.type_params(n);
            self.w(" ");
        }
        self.w(&n.text);
        self.w("(");
        self.params(n)?;
        self.w(")");
        if let Some(rt) = n.declared_type() {
            self.w(": ");
            self.ty(rt);
        }
        match n.fun_body() {
            Some(b) if b.kind == NodeKind::Block => {
                self.w(" ");
                self.block(b)?;
            }
            Some(e) => {
                self.w(" = ");
                self.expr(e, 0)?;
            }
            None => {}
        }
        Ok(())
    }

    fn property(&mut self, n: &Node) -> R {
        self.mods(n.mods);
        self.w(if n.mods.has(Modifiers::VAR) { "var " } else { "val " });
        self.w(&n.text);
        if let Some(t) = n.declared_type() {
            self.w(": ");
            self.ty(t);
        }
        if let Some(i) = n.initializer() {
            self.w(" = ");
            self.expr(i, 0)?;
        }
        Ok(())
    }

    fn ty(&mut self, n: &Node) {
        if n.text == "->" {
            let (ret, ps) = n.children.split_last().expect("function type has a return type");
            self.w("(");
            for (i, p) in ps.iter().enumerate() {
                if i > 0 {
                    self.w(", ");
                }
                self.ty(p);
            }
            self.w(") -> ");
            self.ty(ret);
            return;
        }
        self.w(&n.text);
        if !n.children.is_empty() {
            self.w("<");
            for (i, a) in n.children.iter().enumerate() {
                if i > 0 {
                    self.w(", ");
                }
                self.ty(a);
            }
            self.w(">");
        }
    }

    fn block(&mut self, n: &Node) -> R {
        self.w("{\n");
        self.indent += 1;
        for s in &n.children {
            self.line_start();
            self.stmt(s)?;
            self.w("\n");
        }
        self.indent -= 1;
        self.line_start();
        self.w("}");
        Ok(())
    }

    fn stmt(&mut self, n: &Node) -> R {
        match n.kind {
            NodeKind::VarDecl => {
                self.w(if n.mods.has(Modifiers::VAR) { "var " } else { "val " });
                self.w(&n.text);
                if let Some(t) = n.declared_type() {
                    self.w(": ");
                    self.ty(t);
                }
                self.w(" = ");
                if let Some(i) = n.initializer() {
                    self.expr(i, 0)?;
                }
                Ok(())
            }
            NodeKind::Assign => {
                self.expr(&n.children[0], PREC_ATOM)?;
                self.w(" ");
                self.w(&n.text);
                self.w(" ");
                self.expr(&n.children[1], 0)
            }
            NodeKind::While => {
                self.w("while (");
                self.expr(&n.children[0], 0)?;
                self.w(") ");
                self.block(&n.children[1])
            }
            NodeKind::For => {
                self.w("for (");
                self.w(&n.text);
                self.w(" in ");
                self.expr(&n.children[0], 0)?;
                self.w(") ");
                self.block(&n.children[1])
            }
            NodeKind::If => {
                self.w("if (");
                self.expr(&n.children[0], 0)?;
                self.w(") ");
                self.block(&n.children[1])?;
                if let Some(e) = n.children.get(2) {
                    self.w(" else ");
                    if e.kind == NodeKind::If {
                        self.stmt(e)?;
                    } else {
                        self.block(e)?;
                    }
                }
                Ok(())
            }
            NodeKind::Return => {
                self.w("return");
                if let Some(v) = n.children.first() {
                    self.w(" ");
                    self.expr(v, 0)?;
                }
                Ok(())
            }
            NodeKind::Block => self.block(n),
            _ => self.expr(n, 0),
        }
    }

    fn args(&mut self, args: &[&Node]) -> R {
        self.w("(");
        for (i, a) in args.iter().enumerate() {
            if i > 0 {
                self.w(", ");
            }
            self.expr(a, 0)?;
        }
        self.w(")");
        Ok(())
    }

    fn call_like(&mut self, name: &str, n: &Node, skip: usize) -> R {
        self.w(name);
        let targs: Vec<&Node> = n.children[skip..].iter().filter(|c| c.kind == NodeKind::TypeRef).collect();
        if !targs.is_empty() {
            self.w("<");
            for (i, t) in targs.iter().enumerate() {
                if i > 0 {
                    self.w(", ");
                }
                self.ty(t);
            }
            self.w(">");
        }
        let args: Vec<&Node> = n.children[skip..].iter().filter(|c| c.kind != NodeKind::TypeRef).collect();
        self.args(&args)
    }

    /// Prints `n`, parenthesized when its precedence is below `min`.
    fn expr(&mut self, n: &Node, min: u8) -> R {
        let p = prec(n);
        if p < min {
            self.w("(");
            self.expr(n, 0)?;
            self.w(")");
            return Ok(());
        }
        match n.kind {
            NodeKind::IntLit | NodeKind::DoubleLit | NodeKind::BoolLit | NodeKind::NameRef => self.w(&n.text),
            NodeKind::LongLit => {
                self.w(&n.text);
                self.w("L");
            }
            NodeKind::StringLit => self.w(&quote(&n.text)),
            NodeKind::FunRef => {
                self.w("::");
                self.w(&n.text);
            }
            NodeKind::Placeholder => {
                if !self.holes {
                    return Err(PrintError { id: n.id, ty: n.text.clone() });
                }
                self.w("[");
                self.w(&n.text);
                self.w("]");
            }
            NodeKind::NamedArg => {
                self.w(&n.text);
                self.w(" = ");
                self.expr(&n.children[0], 0)?;
            }
            NodeKind::Call | NodeKind::ConstructorCall => self.call_like(&n.text, n, 0)?,
            NodeKind::MethodCall => {
                self.expr(&n.children[0], 10)?;
                self.w(".");
                self.call_like(&n.text, n, 1)?;
            }
            NodeKind::MemberAccess => {
                self.expr(&n.children[0], 10)?;
                self.w(".");
                self.w(&n.text);
            }
            NodeKind::Index => {
                self.expr(&n.children[0], 10)?;
                self.w("[");
                for (i, a) in n.children[1..].iter().enumerate() {
                    if i > 0 {
                        self.w(", ");
                    }
                    self.expr(a, 0)?;
                }
                self.w("]");
            }
            NodeKind::UnaryOp => {
                self.w(&n.text);
                let operand = &n.children[0];
                let mut tmp = Printer { out: String::new(), indent: self.indent, holes: self.holes };
                tmp.expr(operand, PREC_UNARY)?;
                if n.text == "-" && tmp.out.starts_with(|c: char| c.is_ascii_digit()) {
                    self.w("(");
                    self.w(&tmp.out);
                    self.w(")");
                } else {
                    self.w(&tmp.out);
                }
            }
            NodeKind::BinaryOp | NodeKind::RangeExpr => {
                let lhs = &n.children[0];
                let rhs = &n.children[1];
                // comparisons never chain unparenthesized
                let lmin = if p == 4 { p + 1 } else { p };
                self.expr(lhs, lmin)?;
                if n.text == ".." {
                    self.w("..");
                } else {
                    self.w(" ");
                    self.w(&n.text);
                    self.w(" ");
                }
                self.expr(rhs, p + 1)?;
            }
            _ => {
                let kind = n.kind;
                self.w(&format!("/* {kind:?} */"));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::super::parse;
    use super::*;

    fn round(src: &str) -> String {
        print(&parse(src).unwrap()).unwrap()
    }

    #[test]
    fn minimal_round_trip() {
        assert_eq!(round("var a: Int = 1"), "var a: Int = 1\n");
    }

    #[test]
    fn placeholders_refuse_to_print() {
        let mut t = parse("var a: Int = 1").unwrap();
        let lit = t.root.children[0].children[1].id;
        t.replace_node(lit, Node::placeholder("Int")).unwrap();
        assert!(print(&t).is_err());
        assert_eq!(print_skeleton(&t), "var a: Int = [Int]\n");
    }

    #[test]
    fn precedence_is_preserved() {
        for s in [
            "val a = (1 + 2) * 3\n",
            "val a = 1 - (2 - 3)\n",
            "val a = -(1).plus(2)\n",
            "val a = (b < c) == (d < e)\n",
            "val a = (1..3).first\n",
            "val a = !(b && c)\n",
            "val a = x - -1\n",
            "val a = 0 until n.size\n",
        ] {
            let once = round(s);
            assert_eq!(round(&once), once, "{s}");
            assert_eq!(parse(&once).unwrap(), parse(s).unwrap(), "{s}");
        }
    }

    #[test]
    fn declarations_round_trip() {
        let src = "\
open class B<T: Comparable<T>>(val a: T, n: Int = 2) : I<T> {
    open fun f(x: Int, vararg ys: String): Int {
        if (x > 0) {
            return 1
        } else if (x < 0) {
            return -1
        }
        return 0
    }
    val p: Int = n * 2
}
interface I<T> {
    fun g(): T
}
fun <T> id(x: T): T = x
fun main() {
    val l = listOf<Int>(1, 2)
    var s = 0
    for (i in l) {
        s += i
    }
    l[0]
    println(::id)
    println(B<Int>(a = 1).f(1, \"x\\n\"))
}
";
        assert_eq!(round(src), src);
    }
}
