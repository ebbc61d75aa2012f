//! Line-oriented graph description files.
//!
//! ```text
//! # comment
//! graph star
//! vertex c kirchhoff
//! vertex x neumann
//! vertex y delta(1.5)
//! vertex z custom P=[[1]] Q=[[0]] L=[[0]]
//! edge e1 c x 1.0
//! ```
//!
//! Rows and columns of custom matrices follow the vertex's outgoing bonds in
//! ascending order: for edge `i`, the bond leaving its tail is `2i` and the
//! bond leaving its head is `2i + 1`.

use std::fmt::Write as _;

use num_complex::Complex64;

use crate::conditions::{ConditionsAssignment, Preset, VertexConditions};
use crate::error::{Error, Result};
use crate::graph::{build_graph, EdgeSpec, GraphSpec, MetricGraph};
use crate::linalg::CMatrix;

#[derive(Debug, Clone, PartialEq)]
pub enum CondSpec {
    Preset(Preset),
    Custom { p: CMatrix, q: CMatrix, lambda: CMatrix },
}

#[derive(Debug, Clone, PartialEq)]
pub struct VertexDecl {
    pub id: String,
    pub conditions: CondSpec,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdgeDecl {
    pub id: String,
    pub tail: String,
    pub head: String,
    pub length: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct GraphFile {
    pub name: Option<String>,
    pub vertices: Vec<VertexDecl>,
    pub edges: Vec<EdgeDecl>,
}

impl GraphFile {
    pub fn graph_spec(&self) -> GraphSpec {
        GraphSpec {
            vertices: self.vertices.iter().map(|v| v.id.clone()).collect(),
            edges: self
                .edges
                .iter()
                .map(|e| EdgeSpec { id: e.id.clone(), tail: e.tail.clone(), head: e.head.clone(), length: e.length })
                .collect(),
        }
    }

    /// Builds and validates the graph and its vertex conditions.
    pub fn build(&self) -> Result<(MetricGraph, ConditionsAssignment)> {
        let g = build_graph(&self.graph_spec())?;
        let conditions = self
            .vertices
            .iter()
            .enumerate()
            .map(|(v, decl)| {
                let d = g.degree(v);
                let cond = match &decl.conditions {
                    CondSpec::Preset(p) => VertexConditions::preset(*p, d)?,
                    CondSpec::Custom { p, q, lambda } => {
                        if [p, q, lambda].iter().any(|m| m.nrows() != d || m.ncols() != d) {
                            return Err(Error::DegreeMismatch { vertex: decl.id.clone(), degree: d, size: p.nrows() });
                        }
                        VertexConditions::new(p.clone(), q.clone(), lambda.clone())
                            .map_err(|e| Error::InvalidConditions(format!("vertex `{}`: {e}", decl.id)))?
                    }
                };
                Ok(cond)
            })
            .collect::<Result<Vec<_>>>()?;
        let a = ConditionsAssignment::new(&g, conditions)?;
        Ok((g, a))
    }
}

fn syntax(line: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Parse { line, column, message: message.into() }
}

/// Whitespace-separated word with its 1-based starting column.
#[derive(Debug, Clone, Copy)]
struct Word<'a> {
    text: &'a str,
    column: usize,
}

fn words(line: &str) -> Vec<Word<'_>> {
    let mut out = Vec::new();
    let mut start: Option<usize> = None;
    for (i, ch) in line.char_indices() {
        if ch.is_whitespace() {
            if let Some(s) = start.take() {
                out.push(Word { text: &line[s..i], column: line[..s].chars().count() + 1 });
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        out.push(Word { text: &line[s..], column: line[..s].chars().count() + 1 });
    }
    out
}

fn parse_real(text: &str, line: usize, column: usize) -> Result<f64> {
    match text.parse::<f64>() {
        Ok(x) if x.is_finite() => Ok(x),
        _ => Err(syntax(line, column, format!("expected a finite number, found `{text}`"))),
    }
}

/// `a`, `a+bi`, `a-bi` or `bi`, decimal floats with optional exponents.
pub fn parse_complex(text: &str) -> Option<Complex64> {
    let finite = |s: &str| s.parse::<f64>().ok().filter(|x| x.is_finite());
    let Some(body) = text.strip_suffix('i') else {
        return finite(text).map(|re| Complex64::new(re, 0.0));
    };
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&j| matches!(bytes[j], b'+' | b'-') && !matches!(bytes[j - 1], b'e' | b'E'));
    match split {
        Some(j) => {
            let im = &body[j..];
            let im = if im == "+" || im == "-" { format!("{im}1") } else { im.to_string() };
            Some(Complex64::new(finite(&body[..j])?, finite(&im)?))
        }
        None => Some(Complex64::new(0.0, finite(body)?)),
    }
}

/// Character-level reader for the `P=... Q=... L=...` tail of a custom spec.
struct Cursor<'a> {
    chars: Vec<(usize, char)>,
    text: &'a str,
    pos: usize,
    line: usize,
    /// Column of `text`'s first character.
    offset: usize,
}

impl Cursor<'_> {
    fn column(&self) -> usize {
        self.offset + self.pos
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).map(|&(_, c)| c)
    }

    fn skip_ws(&mut self) {
        while self.peek().is_some_and(char::is_whitespace) {
            self.pos += 1;
        }
    }

    fn expect(&mut self, want: char) -> Result<()> {
        self.skip_ws();
        match self.peek() {
            Some(c) if c == want => {
                self.pos += 1;
                Ok(())
            }
            Some(c) => Err(syntax(self.line, self.column(), format!("expected `{want}`, found `{c}`"))),
            None => Err(syntax(self.line, self.column(), format!("expected `{want}`, found end of line"))),
        }
    }

    fn byte_pos(&self) -> usize {
        self.chars.get(self.pos).map_or(self.text.len(), |&(b, _)| b)
    }

    fn literal(&mut self) -> Result<Complex64> {
        self.skip_ws();
        let column = self.column();
        let start = self.byte_pos();
        while self.peek().is_some_and(|c| c != ',' && c != ']' && !c.is_whitespace()) {
            self.pos += 1;
        }
        let token = &self.text[start..self.byte_pos()];
        parse_complex(token).ok_or_else(|| syntax(self.line, column, format!("invalid complex literal `{token}`")))
    }

    fn row(&mut self) -> Result<Vec<Complex64>> {
        self.expect('[')?;
        let mut row = vec![self.literal()?];
        loop {
            self.skip_ws();
            match self.peek() {
                Some(',') => {
                    self.pos += 1;
                    row.push(self.literal()?);
                }
                _ => {
                    self.expect(']')?;
                    return Ok(row);
                }
            }
        }
    }

    fn matrix(&mut self) -> Result<CMatrix> {
        self.skip_ws();
        let column = self.column();
        self.expect('[')?;
        let mut rows = vec![self.row()?];
        loop {
            self.skip_ws();
            match self.peek() {
                Some(',') => {
                    self.pos += 1;
                    rows.push(self.row()?);
                }
                _ => {
                    self.expect(']')?;
                    break;
                }
            }
        }
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(syntax(self.line, column, "matrix must be square"));
        }
        Ok(CMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    fn label(&mut self) -> Result<char> {
        self.skip_ws();
        let column = self.column();
        let Some(c) = self.peek() else {
            return Err(syntax(self.line, column, "expected `P=`, `Q=` or `L=`"));
        };
        if !matches!(c, 'P' | 'Q' | 'L') {
            return Err(syntax(self.line, column, format!("expected `P=`, `Q=` or `L=`, found `{c}`")));
        }
        self.pos += 1;
        self.expect('=')?;
        Ok(c)
    }
}

fn parse_custom(rest: &str, line: usize, offset: usize) -> Result<CondSpec> {
    let mut cur = Cursor { chars: rest.char_indices().collect(), text: rest, pos: 0, line, offset };
    let mut mats: [Option<CMatrix>; 3] = [None, None, None];
    for _ in 0..3 {
        let column = {
            cur.skip_ws();
            cur.column()
        };
        let slot = match cur.label()? {
            'P' => 0,
            'Q' => 1,
            _ => 2,
        };
        if mats[slot].is_some() {
            return Err(syntax(line, column, "matrix given twice"));
        }
        mats[slot] = Some(cur.matrix()?);
    }
    cur.skip_ws();
    if cur.peek().is_some() {
        return Err(syntax(line, cur.column(), "unexpected text after custom conditions"));
    }
    let [Some(p), Some(q), Some(lambda)] = mats else { unreachable!("three distinct slots filled") };
    Ok(CondSpec::Custom { p, q, lambda })
}

fn parse_condspec(text: &str, word: Word, line: usize) -> Result<CondSpec> {
    let preset = match word.text {
        "kirchhoff" => Some(Preset::Kirchhoff),
        "anti_kirchhoff" => Some(Preset::AntiKirchhoff),
        "dirichlet" => Some(Preset::Dirichlet),
        "neumann" => Some(Preset::Neumann),
        _ => None,
    };
    if let Some(p) = preset {
        return Ok(CondSpec::Preset(p));
    }
    if let Some(arg) = word.text.strip_prefix("delta(").and_then(|s| s.strip_suffix(')')) {
        return Ok(CondSpec::Preset(Preset::Delta(parse_real(arg, line, word.column + 6)?)));
    }
    if word.text == "custom" {
        let start = text.char_indices().nth(word.column - 1 + "custom".len()).map_or(text.len(), |(b, _)| b);
        return parse_custom(&text[start..], line, word.column + "custom".len());
    }
    Err(syntax(line, word.column, format!("unknown vertex conditions `{}`", word.text)))
}

fn expect_arity(ws: &[Word], n: usize, usage: &str, line: usize, end_column: usize) -> Result<()> {
    match ws.len().cmp(&n) {
        std::cmp::Ordering::Less => Err(syntax(line, end_column, format!("too few fields, expected `{usage}`"))),
        std::cmp::Ordering::Greater => Err(syntax(line, ws[n].column, format!("unexpected `{}`, expected `{usage}`", ws[n].text))),
        std::cmp::Ordering::Equal => Ok(()),
    }
}

/// Parses a graph file. Syntax errors carry 1-based line and column; checks
/// that need the whole graph (unknown endpoints, lengths, projector
/// conditions) happen in [`GraphFile::build`].
pub fn parse_graph_file(text: &str) -> Result<GraphFile> {
    let mut file = GraphFile::default();
    let mut seen_content = false;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("");
        let ws = words(content);
        let Some(&head) = ws.first() else { continue };
        let end_column = content.trim_end().chars().count() + 1;
        match head.text {
            "graph" => {
                if seen_content {
                    return Err(syntax(line, head.column, "`graph` must be the first declaration and appear once"));
                }
                expect_arity(&ws, 2, "graph <name>", line, end_column)?;
                file.name = Some(ws[1].text.to_string());
            }
            "vertex" => {
                if ws.len() < 3 {
                    return Err(syntax(line, end_column, "too few fields, expected `vertex <id> <conditions>`"));
                }
                let conditions = parse_condspec(content, ws[2], line)?;
                if !matches!(conditions, CondSpec::Custom { .. }) {
                    expect_arity(&ws, 3, "vertex <id> <conditions>", line, end_column)?;
                }
                file.vertices.push(VertexDecl { id: ws[1].text.to_string(), conditions });
            }
            "edge" => {
                expect_arity(&ws, 5, "edge <id> <tail> <head> <length>", line, end_column)?;
                file.edges.push(EdgeDecl {
                    id: ws[1].text.to_string(),
                    tail: ws[2].text.to_string(),
                    head: ws[3].text.to_string(),
                    length: parse_real(ws[4].text, line, ws[4].column)?,
                });
            }
            other => return Err(syntax(line, head.column, format!("unknown declaration `{other}`"))),
        }
        seen_content = true;
    }
    Ok(file)
}

fn write_complex(out: &mut String, z: Complex64) {
    let sign = if z.im.is_sign_negative() { '-' } else { '+' };
    let _ = write!(out, "{:?}{sign}{:?}i", z.re, z.im.abs());
}

fn write_matrix(out: &mut String, m: &CMatrix) {
    out.push('[');
    for i in 0..m.nrows() {
        if i > 0 {
            out.push(',');
        }
        out.push('[');
        for j in 0..m.ncols() {
            if j > 0 {
                out.push(',');
            }
            write_complex(out, m[(i, j)]);
        }
        out.push(']');
    }
    out.push(']');
}

/// Text that parses back to an identical `GraphFile`.
pub fn serialize(file: &GraphFile) -> String {
    let mut out = String::new();
    if let Some(name) = &file.name {
        let _ = writeln!(out, "graph {name}");
    }
    for v in &file.vertices {
        let _ = write!(out, "vertex {} ", v.id);
        match &v.conditions {
            CondSpec::Preset(Preset::Delta(a)) => {
                let _ = write!(out, "delta({a:?})");
            }
            CondSpec::Preset(p) => {
                let _ = write!(out, "{p}");
            }
            CondSpec::Custom { p, q, lambda } => {
                out.push_str("custom P=");
                write_matrix(&mut out, p);
                out.push_str(" Q=");
                write_matrix(&mut out, q);
                out.push_str(" L=");
                write_matrix(&mut out, lambda);
            }
        }
        out.push('\n');
    }
    for e in &file.edges {
        let _ = writeln!(out, "edge {} {} {} {:?}", e.id, e.tail, e.head, e.length);
    }
    out
}
