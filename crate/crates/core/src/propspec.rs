//! Linearly definable input and output sets, and the text format that
//! describes reachability properties.
//!
//! A property file lists one constraint per line:
//!
//! ```text
//! # cart position and pole angle (radians)
//! in[0] >= -1
//! in[0] <= 1
//! 1*out[1] - 1*out[0] <= 100
//! ```
//!
//! Each line is `<linear-expr> (<=|>=|=) <number>` where the expression is a
//! `+`/`-` separated list of `[coef*]var` terms over `in[i]` or `out[j]`,
//! `#` starts a comment, and whitespace is insignificant. A constraint may
//! reference input variables or output variables, not both. The output
//! section describes the searched-for region directly, i.e. the negation of
//! the safety claim. Strict inequalities are not supported; add an explicit
//! margin instead. Angles and other quantities carry whatever unit the
//! network was trained with; files state raw numbers.

use std::fmt;

use crate::bounds::Interval;
use crate::error::{Error, Result};

/// Constraint relation. LPs decide closed constraints only.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

impl Relation {
    pub fn as_str(self) -> &'static str {
        match self {
            Relation::Le => "<=",
            Relation::Ge => ">=",
            Relation::Eq => "=",
        }
    }

    /// The relation describing the complement half-space (closed
    /// approximation: the shared boundary belongs to both sides).
    pub fn flipped(self) -> Option<Relation> {
        match self {
            Relation::Le => Some(Relation::Ge),
            Relation::Ge => Some(Relation::Le),
            Relation::Eq => None,
        }
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Which variable family a constraint ranges over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarSide {
    Input,
    Output,
}

impl VarSide {
    pub fn keyword(self) -> &'static str {
        match self {
            VarSide::Input => "in",
            VarSide::Output => "out",
        }
    }
}

/// A single linear constraint `sum coef*var <rel> rhs` over one variable
/// family, with at least one nonzero coefficient.
#[derive(Debug, Clone, PartialEq)]
pub struct LinConstraint {
    /// Sparse `(index, coefficient)` terms, ascending by index.
    terms: Vec<(usize, f64)>,
    relation: Relation,
    rhs: f64,
}

impl LinConstraint {
    pub fn new(mut terms: Vec<(usize, f64)>, relation: Relation, rhs: f64) -> Result<Self> {
        terms.sort_by_key(|&(i, _)| i);
        if !rhs.is_finite() || terms.iter().any(|(_, c)| !c.is_finite()) {
            return Err(Error::NonFinite("linear constraint".into()));
        }
        if terms.iter().all(|&(_, c)| c == 0.0) {
            return Err(Error::InvalidParameter(
                "linear constraint needs at least one nonzero coefficient".into(),
            ));
        }
        Ok(Self {
            terms,
            relation,
            rhs,
        })
    }

    pub fn terms(&self) -> &[(usize, f64)] {
        &self.terms
    }

    pub fn relation(&self) -> Relation {
        self.relation
    }

    pub fn rhs(&self) -> f64 {
        self.rhs
    }

    /// Left-hand-side value at `point`.
    pub fn evaluate(&self, point: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|&(i, c)| c * point[i])
            .fold(0.0, |a, b| a + b)
    }

    /// Whether the constraint holds at `point` within additive `tol`.
    pub fn holds(&self, point: &[f64], tol: f64) -> bool {
        let v = self.evaluate(point);
        match self.relation {
            Relation::Le => v <= self.rhs + tol,
            Relation::Ge => v >= self.rhs - tol,
            Relation::Eq => (v - self.rhs).abs() <= tol,
        }
    }

    /// Signed slack at `point`: nonnegative iff the constraint holds exactly.
    pub fn slack(&self, point: &[f64]) -> f64 {
        let v = self.evaluate(point);
        match self.relation {
            Relation::Le => self.rhs - v,
            Relation::Ge => v - self.rhs,
            Relation::Eq => -(v - self.rhs).abs(),
        }
    }

    /// Largest variable index referenced.
    pub fn max_index(&self) -> usize {
        self.terms.last().map(|&(i, _)| i).unwrap_or(0)
    }

    fn display(&self, side: VarSide) -> String {
        let mut s = String::new();
        for (pos, &(i, c)) in self.terms.iter().enumerate() {
            let mag = c.abs();
            if pos == 0 {
                if c < 0.0 {
                    s.push('-');
                }
            } else if c < 0.0 {
                s.push_str(" - ");
            } else {
                s.push_str(" + ");
            }
            if mag == 1.0 {
                s.push_str(&format!("{}[{}]", side.keyword(), i));
            } else {
                s.push_str(&format!("{}*{}[{}]", mag, side.keyword(), i));
            }
        }
        s.push_str(&format!(" {} {}", self.relation, self.rhs));
        s
    }
}

/// Input set and searched-for output set as finite constraint lists.
///
/// Either list may be empty, meaning the whole space.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PropertySpec {
    pub input_constraints: Vec<LinConstraint>,
    pub output_constraints: Vec<LinConstraint>,
}

impl PropertySpec {
    /// Check that every referenced index fits the given network shape.
    pub fn validate_dims(&self, input_dim: usize, output_dim: usize) -> Result<()> {
        for c in &self.input_constraints {
            if c.max_index() >= input_dim {
                return Err(Error::PropertyIndexOutOfRange {
                    var: "in",
                    index: c.max_index(),
                    dim: input_dim,
                });
            }
        }
        for c in &self.output_constraints {
            if c.max_index() >= output_dim {
                return Err(Error::PropertyIndexOutOfRange {
                    var: "out",
                    index: c.max_index(),
                    dim: output_dim,
                });
            }
        }
        Ok(())
    }

    /// Replace a single `<=`/`>=` output constraint by its closed complement.
    ///
    /// Negating a conjunction of several constraints is not linearly
    /// definable, so anything else is rejected.
    pub fn negate_output(&self) -> Result<PropertySpec> {
        if self.output_constraints.len() != 1 {
            return Err(Error::InvalidParameter(format!(
                "--negate-output needs exactly one output constraint, found {}",
                self.output_constraints.len()
            )));
        }
        let c = &self.output_constraints[0];
        let flipped = c.relation.flipped().ok_or_else(|| {
            Error::InvalidParameter(
                "--negate-output supports only <= or >= output constraints".into(),
            )
        })?;
        Ok(PropertySpec {
            input_constraints: self.input_constraints.clone(),
            output_constraints: vec![LinConstraint::new(c.terms.clone(), flipped, c.rhs)?],
        })
    }
}

impl fmt::Display for PropertySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.input_constraints {
            writeln!(f, "{}", c.display(VarSide::Input))?;
        }
        for c in &self.output_constraints {
            writeln!(f, "{}", c.display(VarSide::Output))?;
        }
        Ok(())
    }
}

/// True iff `point` satisfies every constraint in `side` within `tol`.
pub fn check_membership(side: &[LinConstraint], point: &[f64], tol: f64) -> bool {
    side.iter().all(|c| c.holds(point, tol))
}

/// Box extraction result: either per-variable bounds or a proof that two
/// single-variable constraints contradict.
#[derive(Debug, Clone, PartialEq)]
pub enum BoxExtraction {
    Box(Vec<Interval>),
    /// `lower > upper` was derived for this variable index.
    Infeasible { var: usize },
}

/// Tightest per-variable bounds implied by the single-variable constraints
/// in `constraints`. Multi-variable constraints contribute nothing, so the
/// box over-approximates the true feasible set.
pub fn extract_box(constraints: &[LinConstraint], dim: usize) -> BoxExtraction {
    let mut lo = vec![f64::NEG_INFINITY; dim];
    let mut hi = vec![f64::INFINITY; dim];
    for c in constraints {
        let nonzero: Vec<&(usize, f64)> = c.terms.iter().filter(|&&(_, w)| w != 0.0).collect();
        if nonzero.len() != 1 {
            continue;
        }
        let &&(var, coef) = nonzero.first().expect("len checked");
        if var >= dim {
            continue;
        }
        let bound = c.rhs / coef;
        let rel = if coef > 0.0 {
            c.relation
        } else {
            match c.relation {
                Relation::Le => Relation::Ge,
                Relation::Ge => Relation::Le,
                Relation::Eq => Relation::Eq,
            }
        };
        match rel {
            Relation::Le => hi[var] = hi[var].min(bound),
            Relation::Ge => lo[var] = lo[var].max(bound),
            Relation::Eq => {
                lo[var] = lo[var].max(bound);
                hi[var] = hi[var].min(bound);
            }
        }
    }
    for v in 0..dim {
        if lo[v] > hi[v] {
            return BoxExtraction::Infeasible { var: v };
        }
    }
    BoxExtraction::Box(
        lo.into_iter()
            .zip(hi)
            .map(|(l, h)| Interval::new(l, h).expect("l <= h checked"))
            .collect(),
    )
}

struct LineParser<'a> {
    bytes: &'a [u8],
    pos: usize,
    line: usize,
}

impl<'a> LineParser<'a> {
    fn err(&self, message: impl Into<String>) -> Error {
        Error::PropertySyntax {
            line: self.line,
            column: self.pos + 1,
            message: message.into(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && (self.bytes[self.pos] as char).is_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.bytes.get(self.pos).copied()
    }

    fn eat(&mut self, b: u8) -> bool {
        if self.peek() == Some(b) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn number(&mut self) -> Result<f64> {
        self.skip_ws();
        let start = self.pos;
        if matches!(self.bytes.get(self.pos), Some(b'+') | Some(b'-')) {
            self.pos += 1;
        }
        while self
            .bytes
            .get(self.pos)
            .is_some_and(|b| b.is_ascii_digit() || *b == b'.')
        {
            self.pos += 1;
        }
        if matches!(self.bytes.get(self.pos), Some(b'e') | Some(b'E')) {
            self.pos += 1;
            if matches!(self.bytes.get(self.pos), Some(b'+') | Some(b'-')) {
                self.pos += 1;
            }
            while self.bytes.get(self.pos).is_some_and(|b| b.is_ascii_digit()) {
                self.pos += 1;
            }
        }
        let text = std::str::from_utf8(&self.bytes[start..self.pos]).expect("ascii slice");
        text.parse::<f64>()
            .map_err(|_| self.err(format!("expected a number, found {text:?}")))
    }

    fn ident(&mut self) -> String {
        self.skip_ws();
        let start = self.pos;
        while self
            .bytes
            .get(self.pos)
            .is_some_and(|b| b.is_ascii_alphanumeric() || *b == b'_')
        {
            self.pos += 1;
        }
        String::from_utf8_lossy(&self.bytes[start..self.pos]).into_owned()
    }

    /// `in[i]` or `out[j]`.
    fn variable(&mut self) -> Result<(VarSide, usize)> {
        let name = self.ident();
        let side = match name.as_str() {
            "in" => VarSide::Input,
            "out" => VarSide::Output,
            "" => return Err(self.err("expected a variable (`in[i]` or `out[j]`)")),
            other => {
                return Err(self.err(format!(
                    "unknown variable name {other:?} (expected `in` or `out`)"
                )))
            }
        };
        if !self.eat(b'[') {
            return Err(self.err("expected `[` after variable name"));
        }
        let idx = self.number()?;
        if idx.fract() != 0.0 || idx < 0.0 {
            return Err(self.err(format!("variable index must be a nonnegative integer, found {idx}")));
        }
        if !self.eat(b']') {
            return Err(self.err("expected `]` after variable index"));
        }
        Ok((side, idx as usize))
    }

    fn relation(&mut self) -> Result<Relation> {
        match self.peek() {
            Some(b'<') => {
                self.pos += 1;
                if !self.eat(b'=') {
                    return Err(self.err("strict `<` is not supported; use `<=` with a margin"));
                }
                Ok(Relation::Le)
            }
            Some(b'>') => {
                self.pos += 1;
                if !self.eat(b'=') {
                    return Err(self.err("strict `>` is not supported; use `>=` with a margin"));
                }
                Ok(Relation::Ge)
            }
            Some(b'=') => {
                self.pos += 1;
                // Tolerate `==`.
                self.eat(b'=');
                Ok(Relation::Eq)
            }
            _ => Err(self.err("expected a relation (`<=`, `>=`, or `=`)")),
        }
    }

    fn constraint(&mut self) -> Result<(VarSide, LinConstraint)> {
        let mut side: Option<VarSide> = None;
        let mut terms: Vec<(usize, f64)> = Vec::new();
        loop {
            let sign = if self.eat(b'-') {
                -1.0
            } else {
                self.eat(b'+');
                1.0
            };
            let coef = match self.peek() {
                Some(b) if b.is_ascii_digit() || b == b'.' => {
                    let n = self.number()?;
                    // `2*in[0]` and `2 in[0]` both mean coefficient 2.
                    self.eat(b'*');
                    n
                }
                _ => 1.0,
            };
            let (var_side, idx) = self.variable()?;
            match side {
                None => side = Some(var_side),
                Some(s) if s != var_side => {
                    return Err(
                        self.err("a constraint may reference `in` or `out` variables, not both")
                    )
                }
                _ => {}
            }
            if let Some(entry) = terms.iter_mut().find(|(i, _)| *i == idx) {
                entry.1 += sign * coef;
            } else {
                terms.push((idx, sign * coef));
            }
            match self.peek() {
                Some(b'+') | Some(b'-') => continue,
                _ => break,
            }
        }
        let relation = self.relation()?;
        let rhs = self.number()?;
        if self.peek().is_some() {
            return Err(self.err("unexpected trailing input after constraint"));
        }
        let side = side.expect("at least one term parsed");
        let constraint = LinConstraint::new(terms, relation, rhs).map_err(|e| match e {
            Error::InvalidParameter(m) => self.err(m),
            other => other,
        })?;
        Ok((side, constraint))
    }
}

/// Parse a property from its text form.
pub fn parse_property(text: &str) -> Result<PropertySpec> {
    let mut spec = PropertySpec::default();
    for (lineno, raw_line) in text.lines().enumerate() {
        let line = match raw_line.find('#') {
            Some(i) => &raw_line[..i],
            None => raw_line,
        };
        if line.trim().is_empty() {
            continue;
        }
        let mut parser = LineParser {
            bytes: line.as_bytes(),
            pos: 0,
            line: lineno + 1,
        };
        let (side, constraint) = parser.constraint()?;
        match side {
            VarSide::Input => spec.input_constraints.push(constraint),
            VarSide::Output => spec.output_constraints.push(constraint),
        }
    }
    Ok(spec)
}

/// Load a property from a text file.
pub fn load_property<P: AsRef<std::path::Path>>(path: P) -> Result<PropertySpec> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    parse_property(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_box_and_halfspace() {
        let spec = parse_property("in[0] >= -1\nin[0] <= 1\nout[0] >= 0.5").unwrap();
        assert_eq!(spec.input_constraints.len(), 2);
        assert_eq!(spec.output_constraints.len(), 1);
        assert_eq!(spec.input_constraints[0].relation(), Relation::Ge);
        assert_eq!(spec.input_constraints[0].rhs(), -1.0);
        assert_eq!(spec.output_constraints[0].terms(), &[(0, 1.0)]);
    }

    #[test]
    fn parses_two_variable_constraint() {
        let spec = parse_property("1*in[0] - 1*in[1] <= 0.2").unwrap();
        assert_eq!(spec.input_constraints.len(), 1);
        let c = &spec.input_constraints[0];
        assert_eq!(c.terms(), &[(0, 1.0), (1, -1.0)]);
        assert_eq!(c.relation(), Relation::Le);
        assert_eq!(c.rhs(), 0.2);
    }

    #[test]
    fn parses_ipcp_style_query() {
        // Fixed state S = (0, 0, -5*pi/180, 0), asking whether the Q-margin
        // claim can fail: out[1] - out[0] <= 100 is the searched-for region.
        let theta = -5.0 * std::f64::consts::PI / 180.0;
        let text = format!(
            "in[0] = 0\nin[1] = 0\nin[2] = {theta}\nin[3] = 0\nout[1] - out[0] <= 100"
        );
        let spec = parse_property(&text).unwrap();
        assert_eq!(spec.input_constraints.len(), 4);
        assert!(spec
            .input_constraints
            .iter()
            .all(|c| c.relation() == Relation::Eq));
        assert_eq!(spec.input_constraints[2].rhs(), theta);
        assert_eq!(spec.output_constraints.len(), 1);
        assert_eq!(spec.output_constraints[0].terms(), &[(0, -1.0), (1, 1.0)]);
        spec.validate_dims(4, 2).unwrap();
    }

    #[test]
    fn syntax_error_carries_position() {
        match parse_property("in[0] >= -1\nin[0] <* 1") {
            Err(Error::PropertySyntax { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected syntax error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_variable_rejected() {
        assert!(matches!(
            parse_property("x[0] <= 1"),
            Err(Error::PropertySyntax { .. })
        ));
    }

    #[test]
    fn index_out_of_range_detected() {
        let spec = parse_property("in[3] <= 1\nout[0] >= 0").unwrap();
        match spec.validate_dims(2, 1) {
            Err(Error::PropertyIndexOutOfRange { var, index, dim }) => {
                assert_eq!((var, index, dim), ("in", 3, 2));
            }
            other => panic!("expected index error, got {other:?}"),
        }
    }

    #[test]
    fn membership_boundary() {
        let spec = parse_property("in[0] <= 1").unwrap();
        assert!(check_membership(&spec.input_constraints, &[1.0], 1e-6));
        assert!(!check_membership(&spec.input_constraints, &[1.1], 1e-6));
    }

    #[test]
    fn extract_box_examples() {
        let spec = parse_property("in[0] >= -1\nin[0] <= 1").unwrap();
        match extract_box(&spec.input_constraints, 1) {
            BoxExtraction::Box(b) => {
                assert_eq!(b[0].lo(), -1.0);
                assert_eq!(b[0].hi(), 1.0);
            }
            other => panic!("expected box, got {other:?}"),
        }

        let infeasible = parse_property("in[0] >= 2\nin[0] <= 1").unwrap();
        assert_eq!(
            extract_box(&infeasible.input_constraints, 1),
            BoxExtraction::Infeasible { var: 0 }
        );

        // A multi-variable constraint alone contributes no box information.
        let multi = parse_property("in[0] + in[1] <= 1").unwrap();
        match extract_box(&multi.input_constraints, 2) {
            BoxExtraction::Box(b) => {
                assert!(b.iter().all(|iv| iv.lo() == f64::NEG_INFINITY));
                assert!(b.iter().all(|iv| iv.hi() == f64::INFINITY));
            }
            other => panic!("expected box, got {other:?}"),
        }
    }

    #[test]
    fn negative_coefficient_bound_flips() {
        let spec = parse_property("-2*in[0] <= 4").unwrap();
        match extract_box(&spec.input_constraints, 1) {
            BoxExtraction::Box(b) => {
                assert_eq!(b[0].lo(), -2.0);
                assert_eq!(b[0].hi(), f64::INFINITY);
            }
            other => panic!("expected box, got {other:?}"),
        }
    }

    #[test]
    fn print_parse_round_trip() {
        let text = "in[0] >= -1\n2.5*in[0] - in[1] <= 0.25\nout[0] >= 0.5\nout[1] = 0\n";
        let spec = parse_property(text).unwrap();
        let reparsed = parse_property(&spec.to_string()).unwrap();
        assert_eq!(spec, reparsed);
    }

    #[test]
    fn zero_coefficient_constraint_rejected() {
        assert!(parse_property("0*in[0] <= 1").is_err());
        assert!(parse_property("in[0] - in[0] <= 1").is_err());
    }

    #[test]
    fn negate_output_flips_single_halfspace() {
        let spec = parse_property("in[0] <= 1\nout[0] >= 0.5").unwrap();
        let neg = spec.negate_output().unwrap();
        assert_eq!(neg.output_constraints[0].relation(), Relation::Le);
        assert_eq!(neg.output_constraints[0].rhs(), 0.5);

        let eq = parse_property("out[0] = 0.5").unwrap();
        assert!(eq.negate_output().is_err());
        let two = parse_property("out[0] >= 0.5\nout[1] >= 0.5").unwrap();
        assert!(two.negate_output().is_err());
    }
}
