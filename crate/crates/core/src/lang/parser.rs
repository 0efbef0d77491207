use std::collections::HashMap;

use super::lexer::{is_keyword, lex, Tok, Token};
use super::node::{Modifiers, Node, NodeId, NodeKind, SourceSpan, SyntaxTree};
use super::ParseError;

const MAX_NESTING: usize = 64;

/// Parses a TL source file.
pub fn parse(src: &str) -> Result<SyntaxTree, ParseError> {
    let tokens = lex(src)?;
    let mut p = Parser { toks: tokens, pos: 0, next_id: 1, spans: HashMap::new(), depth: 0, paren: 0 };
    let root = p.file()?;
    Ok(SyntaxTree { root, next_id: p.next_id, spans: p.spans })
}

/// Parses a standalone type such as `List<Int>` into a `TypeRef` node.
pub fn parse_type(src: &str) -> Result<Node, ParseError> {
    let tokens = lex(src)?;
    let mut p = Parser { toks: tokens, pos: 0, next_id: 1, spans: HashMap::new(), depth: 0, paren: 0 };
    let t = p.ty()?;
    if !p.at_eof() {
        return Err(p.err("trailing input after type"));
    }
    Ok(t)
}

/// Parses a standalone expression.
pub fn parse_expr(src: &str) -> Result<Node, ParseError> {
    let tokens = lex(src)?;
    let mut p = Parser { toks: tokens, pos: 0, next_id: 1, spans: HashMap::new(), depth: 0, paren: 0 };
    let e = p.expr()?;
    if !p.at_eof() {
        return Err(p.err("trailing input after expression"));
    }
    Ok(e)
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    next_id: NodeId,
    spans: HashMap<NodeId, SourceSpan>,
    depth: usize,
    /// Open parentheses/brackets; line breaks are insignificant inside them.
    paren: usize,
}

type PResult<T> = Result<T, ParseError>;

fn starts_upper(s: &str) -> bool {
    s.chars().next().is_some_and(|c| c.is_ascii_uppercase())
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        let i = (self.pos + k).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    fn tok(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn at_eof(&self) -> bool {
        matches!(self.peek(), Tok::Eof)
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Sym(x) if *x == s)
    }

    fn is_kw(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Ident(x) if x == s)
    }

    fn eat_sym(&mut self, s: &str) -> bool {
        if self.is_sym(s) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn eat_kw(&mut self, s: &str) -> bool {
        if self.is_kw(s) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn err(&self, msg: impl Into<String>) -> ParseError {
        ParseError::new(self.tok().span, msg)
    }

    fn expect_sym(&mut self, s: &str) -> PResult<()> {
        if self.eat_sym(s) {
            Ok(())
        } else {
            Err(self.err(format!("expected '{s}', found {}", describe(self.peek()))))
        }
    }

    fn expect_kw(&mut self, s: &str) -> PResult<()> {
        if self.eat_kw(s) {
            Ok(())
        } else {
            Err(self.err(format!("expected '{s}', found {}", describe(self.peek()))))
        }
    }

    fn ident(&mut self) -> PResult<String> {
        match self.peek().clone() {
            Tok::Ident(s) if !is_keyword(&s) => {
                self.bump();
                Ok(s)
            }
            other => Err(self.err(format!("expected identifier, found {}", describe(&other)))),
        }
    }

    /// Identifier, or one of the infix-method names usable as a member name.
    fn member_name(&mut self) -> PResult<String> {
        if let Tok::Ident(s) = self.peek().clone() {
            if s == "until" || s == "downTo" {
                self.bump();
                return Ok(s);
            }
        }
        self.ident()
    }

    /// Operators on a new line end the current expression unless inside brackets.
    fn continues_line(&self) -> bool {
        self.paren > 0 || !self.tok().nl_before
    }

    fn mk(&mut self, start: usize, kind: NodeKind, text: impl Into<String>, children: Vec<Node>) -> Node {
        let id = self.next_id;
        self.next_id += 1;
        let end = self.toks[self.pos.saturating_sub(1)].span.end.max(start);
        self.spans.insert(id, SourceSpan::new(start, end));
        Node { id, kind, text: text.into(), mods: Modifiers::NONE, children }
    }

    fn start(&self) -> usize {
        self.tok().span.start
    }

    fn enter(&mut self) -> PResult<()> {
        self.depth += 1;
        if self.depth > MAX_NESTING {
            return Err(self.err("nesting too deep"));
        }
        Ok(())
    }

    fn leave(&mut self) {
        self.depth -= 1;
    }

    fn sep(&mut self) -> PResult<()> {
        if self.is_sym(";") {
            while self.eat_sym(";") {}
            return Ok(());
        }
        if self.is_sym("}") || self.at_eof() || self.tok().nl_before {
            return Ok(());
        }
        Err(self.err(format!("expected newline or ';', found {}", describe(self.peek()))))
    }

    // ---- declarations -----------------------------------------------------

    fn file(&mut self) -> PResult<Node> {
        let start = self.start();
        let mut items = Vec::new();
        while self.eat_sym(";") {}
        while !self.at_eof() {
            items.push(self.item()?);
            self.sep()?;
        }
        Ok(self.mk(start, NodeKind::File, "", items))
    }

    fn modifiers(&mut self) -> Modifiers {
        let mut m = Modifiers::NONE;
        loop {
            let found = Modifiers::KEYWORDS.iter().find(|(_, kw)| self.is_kw(kw)).map(|(md, _)| *md);
            match found {
                Some(md) => {
                    self.bump();
                    m = m.with(md);
                }
                None => return m,
            }
        }
    }

    fn item(&mut self) -> PResult<Node> {
        let start = self.start();
        let save = self.pos;
        let mods = self.modifiers();
        if self.is_kw("class") {
            return self.class_decl(start, mods);
        }
        if self.is_kw("interface") {
            return self.interface_decl(start, mods);
        }
        if self.is_kw("fun") {
            return self.fun_decl(start, mods);
        }
        if mods != Modifiers::NONE {
            return Err(self.err("modifiers must precede a declaration"));
        }
        self.pos = save;
        self.stmt()
    }

    fn class_decl(&mut self, start: usize, mods: Modifiers) -> PResult<Node> {
        self.expect_kw("class")?;
        let name = self.ident()?;
        let mut children = self.type_params()?;
        if self.eat_sym("(") {
            self.paren += 1;
            children.extend(self.params()?);
            self.paren -= 1;
            self.expect_sym(")")?;
        }
        if self.eat_sym(":") {
            loop {
                let s = self.start();
                let t = self.ty()?;
                if self.is_sym("(") && t.text != "->" {
                    let mut kids = t.children;
                    kids.extend(self.args()?);
                    let call = self.mk(s, NodeKind::ConstructorCall, t.text, kids);
                    children.push(call);
                } else {
                    children.push(t);
                }
                if !self.eat_sym(",") {
                    break;
                }
            }
        }
        if self.is_sym("{") && !self.tok().nl_before {
            children.extend(self.members()?);
        }
        Ok(self.mk(start, NodeKind::ClassDecl, name, children).with_mods(mods))
    }

    fn interface_decl(&mut self, start: usize, mods: Modifiers) -> PResult<Node> {
        self.expect_kw("interface")?;
        let name = self.ident()?;
        let mut children = self.type_params()?;
        if self.eat_sym(":") {
            loop {
                children.push(self.ty()?);
                if !self.eat_sym(",") {
                    break;
                }
            }
        }
        if self.is_sym("{") && !self.tok().nl_before {
            children.extend(self.members()?);
        }
        Ok(self.mk(start, NodeKind::InterfaceDecl, name, children).with_mods(mods))
    }

    fn members(&mut self) -> PResult<Vec<Node>> {
        self.expect_sym("{")?;
        let mut out = Vec::new();
        while self.eat_sym(";") {}
        while !self.is_sym("}") {
            if self.at_eof() {
                return Err(self.err("unterminated class body"));
            }
            let start = self.start();
            let mods = self.modifiers();
            if self.is_kw("fun") {
                out.push(self.fun_decl(start, mods)?);
            } else if self.is_kw("val") || self.is_kw("var") {
                out.push(self.property_decl(start, mods)?);
            } else {
                return Err(self.err(format!("expected member declaration, found {}", describe(self.peek()))));
            }
            self.sep()?;
        }
        self.expect_sym("}")?;
        Ok(out)
    }

    fn property_decl(&mut self, start: usize, mods: Modifiers) -> PResult<Node> {
        let kind_mod = if self.eat_kw("val") {
            Modifiers::VAL
        } else {
            self.expect_kw("var")?;
            Modifiers::VAR
        };
        let name = self.ident()?;
        let mut children = Vec::new();
        if self.eat_sym(":") {
            children.push(self.ty()?);
        }
        if self.eat_sym("=") {
            children.push(self.expr()?);
        }
        Ok(self.mk(start, NodeKind::PropertyDecl, name, children).with_mods(mods.with(kind_mod)))
    }

    fn fun_decl(&mut self, start: usize, mods: Modifiers) -> PResult<Node> {
        self.expect_kw("fun")?;
        let mut children = self.type_params()?;
        let name = self.member_name()?;
        self.expect_sym("(")?;
        self.paren += 1;
        children.extend(self.params()?);
        self.paren -= 1;
        self.expect_sym(")")?;
        if self.eat_sym(":") {
            children.push(self.ty()?);
        }
        if self.is_sym("{") {
            children.push(self.block()?);
        } else if self.eat_sym("=") {
            children.push(self.expr()?);
        }
        Ok(self.mk(start, NodeKind::FunDecl, name, children).with_mods(mods))
    }

    fn type_params(&mut self) -> PResult<Vec<Node>> {
        let mut out = Vec::new();
        if !self.eat_sym("<") {
            return Ok(out);
        }
        loop {
            let s = self.start();
            let name = self.ident()?;
            let mut kids = Vec::new();
            if self.eat_sym(":") {
                kids.push(self.ty()?);
            }
            out.push(self.mk(s, NodeKind::TypeParamDecl, name, kids));
            if !self.eat_sym(",") {
                break;
            }
        }
        self.expect_sym(">")?;
        Ok(out)
    }

    fn params(&mut self) -> PResult<Vec<Node>> {
        let mut out = Vec::new();
        if self.is_sym(")") {
            return Ok(out);
        }
        loop {
            let s = self.start();
            let mut mods = self.modifiers();
            if self.eat_kw("val") {
                mods = mods.with(Modifiers::VAL);
            } else if self.eat_kw("var") {
                mods = mods.with(Modifiers::VAR);
            }
            let name = self.ident()?;
            self.expect_sym(":")?;
            let mut kids = vec![self.ty()?];
            if self.eat_sym("=") {
                kids.push(self.expr()?);
            }
            out.push(self.mk(s, NodeKind::Param, name, kids).with_mods(mods));
            if !self.eat_sym(",") {
                break;
            }
        }
        Ok(out)
    }

    fn ty(&mut self) -> PResult<Node> {
        self.enter()?;
        let r = self.ty_inner();
        self.leave();
        r
    }

    fn ty_inner(&mut self) -> PResult<Node> {
        let s = self.start();
        if self.eat_sym("(") {
            let mut kids = Vec::new();
            if !self.is_sym(")") {
                loop {
                    kids.push(self.ty()?);
                    if !self.eat_sym(",") {
                        break;
                    }
                }
            }
            self.expect_sym(")")?;
            self.expect_sym("->")?;
            kids.push(self.ty()?);
            return Ok(self.mk(s, NodeKind::TypeRef, "->", kids));
        }
        let name = match self.peek().clone() {
            Tok::Ident(n) if !is_keyword(&n) => {
                self.bump();
                n
            }
            other => return Err(self.err(format!("expected type, found {}", describe(&other)))),
        };
        let mut kids = Vec::new();
        if self.is_sym("<") && !self.tok().nl_before {
            self.bump();
            loop {
                kids.push(self.ty()?);
                if !self.eat_sym(",") {
                    break;
                }
            }
            self.expect_sym(">")?;
        }
        Ok(self.mk(s, NodeKind::TypeRef, name, kids))
    }

    // ---- statements -------------------------------------------------------

    fn block(&mut self) -> PResult<Node> {
        self.enter()?;
        let s = self.start();
        self.expect_sym("{")?;
        let saved = self.paren;
        self.paren = 0;
        let mut stmts = Vec::new();
        while self.eat_sym(";") {}
        while !self.is_sym("}") {
            if self.at_eof() {
                return Err(self.err("unterminated block"));
            }
            stmts.push(self.stmt()?);
            self.sep()?;
        }
        self.paren = saved;
        self.expect_sym("}")?;
        self.leave();
        Ok(self.mk(s, NodeKind::Block, "", stmts))
    }

    fn stmt(&mut self) -> PResult<Node> {
        let s = self.start();
        if self.is_kw("val") || self.is_kw("var") {
            let m = if self.eat_kw("val") {
                Modifiers::VAL
            } else {
                self.bump();
                Modifiers::VAR
            };
            let name = self.ident()?;
            let mut kids = Vec::new();
            if self.eat_sym(":") {
                kids.push(self.ty()?);
            }
            self.expect_sym("=")?;
            kids.push(self.expr()?);
            return Ok(self.mk(s, NodeKind::VarDecl, name, kids).with_mods(m));
        }
        if self.eat_kw("while") {
            self.expect_sym("(")?;
            self.paren += 1;
            let cond = self.expr()?;
            self.paren -= 1;
            self.expect_sym(")")?;
            let body = self.block()?;
            return Ok(self.mk(s, NodeKind::While, "", vec![cond, body]));
        }
        if self.eat_kw("for") {
            self.expect_sym("(")?;
            self.paren += 1;
            let var = self.ident()?;
            self.expect_kw("in")?;
            let iter = self.expr()?;
            self.paren -= 1;
            self.expect_sym(")")?;
            let body = self.block()?;
            return Ok(self.mk(s, NodeKind::For, var, vec![iter, body]));
        }
        if self.is_kw("if") {
            return self.if_stmt();
        }
        if self.eat_kw("return") {
            let mut kids = Vec::new();
            if !(self.is_sym("}") || self.is_sym(";") || self.at_eof() || self.tok().nl_before) {
                kids.push(self.expr()?);
            }
            return Ok(self.mk(s, NodeKind::Return, "", kids));
        }
        let lhs = self.expr()?;
        const ASSIGN: [&str; 6] = ["=", "+=", "-=", "*=", "/=", "%="];
        if let Tok::Sym(op) = self.peek().clone() {
            if ASSIGN.contains(&op) && !self.tok().nl_before {
                if !matches!(lhs.kind, NodeKind::NameRef | NodeKind::MemberAccess | NodeKind::Index | NodeKind::Placeholder) {
                    return Err(self.err("invalid assignment target"));
                }
                self.bump();
                let rhs = self.expr()?;
                return Ok(self.mk(s, NodeKind::Assign, op, vec![lhs, rhs]));
            }
        }
        Ok(lhs)
    }

    fn if_stmt(&mut self) -> PResult<Node> {
        self.enter()?;
        let s = self.start();
        self.expect_kw("if")?;
        self.expect_sym("(")?;
        self.paren += 1;
        let cond = self.expr()?;
        self.paren -= 1;
        self.expect_sym(")")?;
        let then = self.block()?;
        let mut kids = vec![cond, then];
        if self.eat_kw("else") {
            if self.is_kw("if") {
                kids.push(self.if_stmt()?);
            } else {
                kids.push(self.block()?);
            }
        }
        self.leave();
        Ok(self.mk(s, NodeKind::If, "", kids))
    }

    // ---- expressions ------------------------------------------------------

    fn expr(&mut self) -> PResult<Node> {
        self.enter()?;
        let r = self.binary(0);
        self.leave();
        r
    }

    fn binary(&mut self, level: usize) -> PResult<Node> {
        const LEVELS: [&[&str]; 8] = [
            &["||"],
            &["&&"],
            &["==", "!="],
            &["<", ">", "<=", ">="],
            &["until", "downTo"],
            &[".."],
            &["+", "-"],
            &["*", "/", "%"],
        ];
        if level == LEVELS.len() {
            return self.unary();
        }
        let s = self.start();
        let mut lhs = self.binary(level + 1)?;
        loop {
            if !self.continues_line() {
                break;
            }
            let op = match self.peek() {
                Tok::Sym(x) if LEVELS[level].contains(x) => x.to_string(),
                Tok::Ident(x) if LEVELS[level].contains(&x.as_str()) => x.clone(),
                _ => break,
            };
            self.bump();
            self.enter()?;
            let rhs = self.binary(level + 1)?;
            self.leave();
            let kind = if level == 4 || level == 5 { NodeKind::RangeExpr } else { NodeKind::BinaryOp };
            lhs = self.mk(s, kind, op, vec![lhs, rhs]);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> PResult<Node> {
        let s = self.start();
        if self.is_sym("-") {
            // a minus directly applied to a numeric literal folds into the literal
            let lit = match self.peek_at(1).clone() {
                Tok::Int(t) => Some((NodeKind::IntLit, t)),
                Tok::Long(t) => Some((NodeKind::LongLit, t)),
                Tok::Double(t) => Some((NodeKind::DoubleLit, t)),
                _ => None,
            };
            if let Some((kind, text)) = lit {
                self.bump();
                self.bump();
                let node = self.literal(s, kind, format!("-{text}"))?;
                return self.postfix(s, node);
            }
            self.bump();
            self.enter()?;
            let e = self.unary()?;
            self.leave();
            return Ok(self.mk(s, NodeKind::UnaryOp, "-", vec![e]));
        }
        if self.eat_sym("!") {
            self.enter()?;
            let e = self.unary()?;
            self.leave();
            return Ok(self.mk(s, NodeKind::UnaryOp, "!", vec![e]));
        }
        let p = self.primary()?;
        self.postfix(s, p)
    }

    fn literal(&mut self, s: usize, kind: NodeKind, text: String) -> PResult<Node> {
        let ok = match kind {
            NodeKind::IntLit => text.parse::<i32>().is_ok(),
            NodeKind::LongLit => text.parse::<i64>().is_ok(),
            NodeKind::DoubleLit => text.parse::<f64>().is_ok_and(f64::is_finite),
            _ => true,
        };
        if !ok {
            return Err(ParseError::new(SourceSpan::new(s, self.toks[self.pos - 1].span.end), "numeric literal out of range"));
        }
        Ok(self.mk(s, kind, text, vec![]))
    }

    fn postfix(&mut self, s: usize, mut node: Node) -> PResult<Node> {
        loop {
            if !self.continues_line() {
                return Ok(node);
            }
            if self.eat_sym(".") {
                let name = self.member_name()?;
                if let Some(targs) = self.try_call_type_args() {
                    let mut kids = vec![node];
                    kids.extend(targs);
                    kids.extend(self.args()?);
                    node = self.mk(s, NodeKind::MethodCall, name, kids);
                } else if self.is_sym("(") && !self.tok().nl_before {
                    let mut kids = vec![node];
                    kids.extend(self.args()?);
                    node = self.mk(s, NodeKind::MethodCall, name, kids);
                } else {
                    node = self.mk(s, NodeKind::MemberAccess, name, vec![node]);
                }
            } else if self.is_sym("[") {
                self.bump();
                self.paren += 1;
                let mut kids = vec![node];
                loop {
                    kids.push(self.expr()?);
                    if !self.eat_sym(",") {
                        break;
                    }
                }
                self.paren -= 1;
                self.expect_sym("]")?;
                node = self.mk(s, NodeKind::Index, "", kids);
            } else {
                return Ok(node);
            }
        }
    }

    /// `<T, ...>` immediately followed by `(`; restores the position otherwise.
    fn try_call_type_args(&mut self) -> Option<Vec<Node>> {
        if !self.is_sym("<") || self.tok().nl_before {
            return None;
        }
        let save = (self.pos, self.next_id, self.depth);
        self.bump();
        let mut out = Vec::new();
        let ok = (|| -> PResult<()> {
            loop {
                let t = self.ty()?;
                if t.text != "->" && !starts_upper(&t.text) {
                    return Err(self.err("not a type"));
                }
                out.push(t);
                if !self.eat_sym(",") {
                    break;
                }
            }
            self.expect_sym(">")?;
            if !self.is_sym("(") || self.tok().nl_before {
                return Err(self.err("not a call"));
            }
            Ok(())
        })();
        match ok {
            Ok(()) => Some(out),
            Err(_) => {
                self.pos = save.0;
                self.next_id = save.1;
                self.depth = save.2;
                None
            }
        }
    }

    fn args(&mut self) -> PResult<Vec<Node>> {
        self.expect_sym("(")?;
        self.paren += 1;
        let mut out = Vec::new();
        if !self.is_sym(")") {
            loop {
                let s = self.start();
                let named = matches!(self.peek(), Tok::Ident(n) if !is_keyword(n))
                    && matches!(self.peek_at(1), Tok::Sym("="));
                if named {
                    let name = self.ident()?;
                    self.bump();
                    let v = self.expr()?;
                    out.push(self.mk(s, NodeKind::NamedArg, name, vec![v]));
                } else {
                    out.push(self.expr()?);
                }
                if !self.eat_sym(",") {
                    break;
                }
            }
        }
        self.paren -= 1;
        self.expect_sym(")")?;
        Ok(out)
    }

    fn primary(&mut self) -> PResult<Node> {
        let s = self.start();
        match self.peek().clone() {
            Tok::Int(t) => {
                self.bump();
                self.literal(s, NodeKind::IntLit, t)
            }
            Tok::Long(t) => {
                self.bump();
                self.literal(s, NodeKind::LongLit, t)
            }
            Tok::Double(t) => {
                self.bump();
                self.literal(s, NodeKind::DoubleLit, t)
            }
            Tok::Str(v) => {
                self.bump();
                Ok(self.mk(s, NodeKind::StringLit, v, vec![]))
            }
            Tok::Sym("(") => {
                self.bump();
                self.paren += 1;
                let e = self.expr()?;
                self.paren -= 1;
                self.expect_sym(")")?;
                Ok(e)
            }
            Tok::Sym("::") => {
                self.bump();
                let name = self.ident()?;
                Ok(self.mk(s, NodeKind::FunRef, name, vec![]))
            }
            Tok::Ident(ref w) if w == "true" || w == "false" => {
                let w = w.clone();
                self.bump();
                Ok(self.mk(s, NodeKind::BoolLit, w, vec![]))
            }
            Tok::Ident(_) => {
                let name = self.ident()?;
                let kind = if starts_upper(&name) { NodeKind::ConstructorCall } else { NodeKind::Call };
                if let Some(targs) = self.try_call_type_args() {
                    let mut kids = targs;
                    kids.extend(self.args()?);
                    return Ok(self.mk(s, kind, name, kids));
                }
                if self.is_sym("(") && !self.tok().nl_before {
                    let kids = self.args()?;
                    return Ok(self.mk(s, kind, name, kids));
                }
                Ok(self.mk(s, NodeKind::NameRef, name, vec![]))
            }
            other => Err(self.err(format!("expected expression, found {}", describe(&other)))),
        }
    }
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Ident(s) => format!("'{s}'"),
        Tok::Int(s) | Tok::Long(s) | Tok::Double(s) => format!("number {s}"),
        Tok::Str(_) => "string literal".into(),
        Tok::Sym(s) => format!("'{s}'"),
        Tok::Eof => "end of input".into(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_declaration() {
        let t = parse("var a: Int = 1").unwrap();
        let d = &t.root.children[0];
        assert_eq!(d.kind, NodeKind::VarDecl);
        assert!(d.mods.has(Modifiers::VAR));
        assert_eq!(d.children[1].kind, NodeKind::IntLit);
        assert_eq!(d.children[1].text, "1");
    }

    #[test]
    fn missing_type_is_reported_at_the_equals_sign() {
        let e = parse("var a: = 1").unwrap_err();
        assert_eq!(e.span.start, 7);
        assert!(e.message.contains("expected type"));
    }

    #[test]
    fn fibonacci_program_has_loop_shape() {
        let src = "var a: Int = 1\nvar b: Int = 1\nwhile (b < 100) {\n    val c = b\n    b = a + b\n    a = c\n}\n";
        let t = parse(src).unwrap();
        let w = &t.root.children[2];
        assert_eq!(w.kind, NodeKind::While);
        assert_eq!(w.children[0].kind, NodeKind::BinaryOp);
        let body = &w.children[1];
        assert_eq!(body.children[1].kind, NodeKind::Assign);
        assert_eq!(body.children[1].children[1].kind, NodeKind::BinaryOp);
    }

    #[test]
    fn generic_calls_and_comparisons_are_distinguished() {
        let e = parse_expr("listOf<Int>(1, 2)").unwrap();
        assert_eq!(e.kind, NodeKind::Call);
        assert_eq!(e.children[0].kind, NodeKind::TypeRef);
        let e = parse_expr("a < b").unwrap();
        assert_eq!(e.kind, NodeKind::BinaryOp);
        let e = parse_expr("f(a < b, c > (d))").unwrap();
        assert_eq!(e.children.len(), 2);
    }

    #[test]
    fn negative_literals_fold() {
        let e = parse_expr("-100").unwrap();
        assert_eq!((e.kind, e.text.as_str()), (NodeKind::IntLit, "-100"));
        let e = parse_expr("-2147483648").unwrap();
        assert_eq!(e.text, "-2147483648");
        assert!(parse_expr("2147483648").is_err());
    }

    #[test]
    fn class_with_supertypes() {
        let t = parse("class C(override val a: Int) : B, Base<Int>(a) {\n    fun f(): Int = a\n}").unwrap();
        let c = &t.root.children[0];
        assert_eq!(c.kind, NodeKind::ClassDecl);
        let p = c.params().next().unwrap();
        assert!(p.mods.has(Modifiers::OVERRIDE) && p.mods.has(Modifiers::VAL));
        assert_eq!(c.super_interfaces().next().unwrap().text, "B");
        let sc = c.superclass_call().unwrap();
        assert_eq!(sc.text, "Base");
        assert_eq!(sc.children.len(), 2);
        assert_eq!(c.members().count(), 1);
    }

    #[test]
    fn newline_ends_expression() {
        let t = parse("val a = 1\n-2").unwrap();
        assert_eq!(t.root.children.len(), 2);
    }

    #[test]
    fn deep_nesting_is_an_error_not_a_crash() {
        let src = format!("val a = {}1{}", "(".repeat(500), ")".repeat(500));
        assert!(parse(&src).is_err());
    }
}
