//! Recursive-descent checker for the Graphviz DOT language (graphs, node,
//! edge and attribute statements, subgraphs, ports, all ID forms).

use std::collections::BTreeSet;

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Punct(char),
    EdgeOp(&'static str),
    Id(String),
}

fn lex(src: &str) -> Result<Vec<Tok>, String> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    let at_line_start = |i: usize| chars[..i].iter().rev().take_while(|c| **c != '\n').all(|c| c.is_whitespace());
    while i < chars.len() {
        let c = chars[i];
        match c {
            c if c.is_whitespace() => i += 1,
            '#' if at_line_start(i) => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
            }
            '/' if chars.get(i + 1) == Some(&'/') => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
            }
            '/' if chars.get(i + 1) == Some(&'*') => {
                let rest: String = chars[i + 2..].iter().collect();
                let end = rest.find("*/").ok_or("unterminated block comment")?;
                i += 2 + rest[..end].chars().count() + 2;
            }
            '{' | '}' | '[' | ']' | '=' | ';' | ',' | ':' => {
                out.push(Tok::Punct(c));
                i += 1;
            }
            '-' if chars.get(i + 1) == Some(&'>') => {
                out.push(Tok::EdgeOp("->"));
                i += 2;
            }
            '-' if chars.get(i + 1) == Some(&'-') => {
                out.push(Tok::EdgeOp("--"));
                i += 2;
            }
            '"' => {
                let mut s = String::new();
                i += 1;
                loop {
                    match chars.get(i) {
                        None => return Err("unterminated string".into()),
                        Some('"') => break,
                        Some('\\') if chars.get(i + 1).is_some() => {
                            s.push(chars[i + 1]);
                            i += 2;
                        }
                        Some(&ch) => {
                            s.push(ch);
                            i += 1;
                        }
                    }
                }
                i += 1;
                out.push(Tok::Id(s));
            }
            '<' => {
                let mut depth = 0;
                let start = i;
                loop {
                    match chars.get(i) {
                        None => return Err("unterminated HTML string".into()),
                        Some('<') => depth += 1,
                        Some('>') => {
                            depth -= 1;
                            if depth == 0 {
                                break;
                            }
                        }
                        _ => {}
                    }
                    i += 1;
                }
                i += 1;
                out.push(Tok::Id(chars[start..i].iter().collect()));
            }
            c if c == '-' || c == '.' || c.is_ascii_digit() => {
                let start = i;
                if chars[i] == '-' {
                    i += 1;
                }
                let digits_start = i;
                let mut dot = false;
                while i < chars.len() && (chars[i].is_ascii_digit() || (chars[i] == '.' && !dot)) {
                    dot |= chars[i] == '.';
                    i += 1;
                }
                let body: String = chars[digits_start..i].iter().collect();
                if body.is_empty() || body == "." {
                    return Err(format!("malformed numeral at char {start}"));
                }
                if i < chars.len() && (chars[i].is_alphabetic() || chars[i] == '_') {
                    return Err(format!("identifier may not start with a digit at char {start}"));
                }
                out.push(Tok::Id(chars[start..i].iter().collect()));
            }
            c if c.is_alphabetic() || c == '_' || !c.is_ascii() => {
                let start = i;
                while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_' || !chars[i].is_ascii()) {
                    i += 1;
                }
                out.push(Tok::Id(chars[start..i].iter().collect()));
            }
            other => return Err(format!("unexpected character {other:?} at {i}")),
        }
    }
    Ok(out)
}

/// Facts collected while parsing.
#[derive(Debug, Default)]
pub struct DotGraph {
    pub directed: bool,
    pub nodes: BTreeSet<String>,
    pub edges: Vec<(String, String, Vec<(String, String)>)>,
    pub node_attrs: Vec<(String, Vec<(String, String)>)>,
}

struct Parser {
    toks: Vec<Tok>,
    pos: usize,
    edge_op: &'static str,
    graph: DotGraph,
}

fn is_keyword(s: &str, kw: &str) -> bool {
    s.eq_ignore_ascii_case(kw)
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn expect(&mut self, c: char) -> Result<(), String> {
        match self.next() {
            Some(Tok::Punct(p)) if p == c => Ok(()),
            other => Err(format!("expected {c:?}, found {other:?} at token {}", self.pos - 1)),
        }
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(&Tok::Punct(c)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn id(&mut self) -> Result<String, String> {
        match self.next() {
            Some(Tok::Id(s)) => Ok(s),
            other => Err(format!("expected an ID, found {other:?} at token {}", self.pos - 1)),
        }
    }

    fn peek_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Some(Tok::Id(s)) if is_keyword(s, kw))
    }

    fn graph(&mut self) -> Result<(), String> {
        if self.peek_keyword("strict") {
            self.pos += 1;
        }
        let kind = self.id()?;
        if is_keyword(&kind, "digraph") {
            self.graph.directed = true;
            self.edge_op = "->";
        } else if is_keyword(&kind, "graph") {
            self.edge_op = "--";
        } else {
            return Err(format!("expected graph or digraph, found {kind:?}"));
        }
        if matches!(self.peek(), Some(Tok::Id(_))) {
            self.pos += 1;
        }
        self.expect('{')?;
        self.stmt_list()?;
        self.expect('}')?;
        if self.pos != self.toks.len() {
            return Err("trailing tokens after the graph".into());
        }
        Ok(())
    }

    fn stmt_list(&mut self) -> Result<(), String> {
        while !matches!(self.peek(), Some(Tok::Punct('}')) | None) {
            self.stmt()?;
            self.eat(';');
        }
        Ok(())
    }

    fn stmt(&mut self) -> Result<(), String> {
        if self.peek_keyword("graph") || self.peek_keyword("node") || self.peek_keyword("edge") {
            self.pos += 1;
            if !matches!(self.peek(), Some(Tok::Punct('['))) {
                return Err("attribute statement needs an attribute list".into());
            }
            self.attr_list()?;
            return Ok(());
        }
        if matches!(self.toks.get(self.pos + 1), Some(Tok::Punct('='))) && matches!(self.peek(), Some(Tok::Id(_))) {
            self.id()?;
            self.expect('=')?;
            self.id()?;
            return Ok(());
        }
        let first = self.operand()?;
        if matches!(self.peek(), Some(Tok::EdgeOp(_))) {
            let mut ends = vec![first];
            while let Some(Tok::EdgeOp(op)) = self.peek().cloned() {
                if op != self.edge_op {
                    return Err(format!("edge operator {op} in a graph expecting {}", self.edge_op));
                }
                self.pos += 1;
                ends.push(self.operand()?);
            }
            let attrs = if matches!(self.peek(), Some(Tok::Punct('['))) { self.attr_list()? } else { Vec::new() };
            for w in ends.windows(2) {
                for a in &w[0] {
                    for b in &w[1] {
                        self.graph.edges.push((a.clone(), b.clone(), attrs.clone()));
                    }
                }
            }
        } else {
            if first.len() != 1 {
                return Ok(()); // bare subgraph
            }
            let attrs = if matches!(self.peek(), Some(Tok::Punct('['))) { self.attr_list()? } else { Vec::new() };
            self.graph.node_attrs.push((first[0].clone(), attrs));
        }
        Ok(())
    }

    /// A node id (with optional port) or a subgraph; returns the node names.
    fn operand(&mut self) -> Result<Vec<String>, String> {
        if self.peek_keyword("subgraph") || matches!(self.peek(), Some(Tok::Punct('{'))) {
            let before: BTreeSet<String> = self.graph.nodes.clone();
            if self.peek_keyword("subgraph") {
                self.pos += 1;
                if matches!(self.peek(), Some(Tok::Id(_))) {
                    self.pos += 1;
                }
            }
            self.expect('{')?;
            self.stmt_list()?;
            self.expect('}')?;
            return Ok(self.graph.nodes.difference(&before).cloned().collect());
        }
        let name = self.id()?;
        if self.eat(':') {
            self.id()?;
            if self.eat(':') {
                self.id()?;
            }
        }
        self.graph.nodes.insert(name.clone());
        Ok(vec![name])
    }

    fn attr_list(&mut self) -> Result<Vec<(String, String)>, String> {
        let mut attrs = Vec::new();
        while self.eat('[') {
            while !self.eat(']') {
                let k = self.id()?;
                self.expect('=')?;
                let v = self.id()?;
                attrs.push((k, v));
                if !self.eat(',') {
                    self.eat(';');
                }
            }
        }
        Ok(attrs)
    }
}

/// Parses `src`, returning the graph facts or the first syntax error.
pub fn parse_dot(src: &str) -> Result<DotGraph, String> {
    let mut p = Parser {
        toks: lex(src)?,
        pos: 0,
        edge_op: "->",
        graph: DotGraph::default(),
    };
    p.graph()?;
    Ok(p.graph)
}
