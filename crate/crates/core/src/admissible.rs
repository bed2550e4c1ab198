//! Parameter admissibility checks for the well-posedness results.
//!
//! Inequalities are evaluated in exact rational arithmetic whenever the
//! inputs are rational (CLI inputs parse decimal strings and `a/b` forms
//! exactly). A strict inequality that holds with equality is reported as
//! `Boundary` rather than silently passing or failing; inputs that cannot
//! be represented exactly fall back to floating point with a `1e-12`
//! tolerance band, also reported as `Boundary`.
//!
//! Every check reports the first violated constraint as a structured
//! record `(name, lhs, relation, rhs)`.

use serde::Serialize;
use std::cmp::Ordering;
use std::fmt;

// ---------------------------------------------------------------------------
// Exact rationals with float fallback
// ---------------------------------------------------------------------------

/// Reduced rational over i128, denominator positive.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rat {
    num: i128,
    den: i128,
}

fn gcd(a: i128, b: i128) -> i128 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a.max(1)
}

impl Rat {
    pub fn new(num: i128, den: i128) -> Option<Rat> {
        if den == 0 {
            return None;
        }
        let sign = if den < 0 { -1 } else { 1 };
        let g = gcd(num, den);
        Some(Rat { num: sign * num / g, den: (den / g).abs() })
    }

    pub fn int(v: i128) -> Rat {
        Rat { num: v, den: 1 }
    }

    pub fn to_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }

    pub fn floor(self) -> i128 {
        self.num.div_euclid(self.den)
    }

    fn add(self, o: Rat) -> Option<Rat> {
        let n = self.num.checked_mul(o.den)?.checked_add(o.num.checked_mul(self.den)?)?;
        Rat::new(n, self.den.checked_mul(o.den)?)
    }

    fn mul(self, o: Rat) -> Option<Rat> {
        // cross-reduce first to delay overflow
        let g1 = gcd(self.num, o.den);
        let g2 = gcd(o.num, self.den);
        let n = (self.num / g1).checked_mul(o.num / g2)?;
        let d = (self.den / g2).checked_mul(o.den / g1)?;
        Rat::new(n, d)
    }

    fn cmp_exact(self, o: Rat) -> Option<Ordering> {
        let l = self.num.checked_mul(o.den)?;
        let r = o.num.checked_mul(self.den)?;
        Some(l.cmp(&r))
    }

    /// Exact conversion of a binary float; fails for extreme exponents.
    pub fn from_f64_exact(x: f64) -> Option<Rat> {
        if !x.is_finite() {
            return None;
        }
        if x == 0.0 {
            return Some(Rat::int(0));
        }
        let bits = x.to_bits();
        let sign = if bits >> 63 == 1 { -1i128 } else { 1 };
        let exp = ((bits >> 52) & 0x7ff) as i64;
        let frac = (bits & ((1u64 << 52) - 1)) as i128;
        let (mant, e2) = if exp == 0 {
            (frac, -1074i64)
        } else {
            (frac + (1i128 << 52), exp - 1075)
        };
        if e2 >= 0 {
            if e2 > 70 {
                return None;
            }
            Rat::new(sign * mant.checked_shl(e2 as u32)?, 1)
        } else {
            let shift = -e2;
            if shift > 120 {
                return None;
            }
            Rat::new(sign * mant, 1i128.checked_shl(shift as u32)?)
        }
    }

    /// Parse `a/b`, integers, or exact decimals (e.g. `1.25` -> 5/4).
    pub fn parse(s: &str) -> Option<Rat> {
        let s = s.trim();
        if let Some((a, b)) = s.split_once('/') {
            let num: i128 = a.trim().parse().ok()?;
            let den: i128 = b.trim().parse().ok()?;
            return Rat::new(num, den);
        }
        if let Some((int_part, frac_part)) = s.split_once('.') {
            let neg = int_part.trim_start().starts_with('-');
            let ip: i128 = if int_part.is_empty() || int_part == "-" {
                0
            } else {
                int_part.parse().ok()?
            };
            if frac_part.len() > 30 {
                return None;
            }
            let fp: i128 = if frac_part.is_empty() { 0 } else { frac_part.parse().ok()? };
            let scale = 10i128.checked_pow(frac_part.len() as u32)?;
            let num = ip.checked_mul(scale)?;
            let num = if neg { num.checked_sub(fp)? } else { num.checked_add(fp)? };
            return Rat::new(num, scale);
        }
        let v: i128 = s.parse().ok()?;
        Some(Rat::int(v))
    }
}

impl fmt::Display for Rat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == 1 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

/// Scalar carrying an exact rational when available and always a float.
#[derive(Debug, Clone, Copy)]
pub struct Value {
    rat: Option<Rat>,
    f: f64,
}

pub const FLOAT_BOUNDARY_BAND: f64 = 1e-12;

impl Value {
    pub fn rat(r: Rat) -> Value {
        Value { rat: Some(r), f: r.to_f64() }
    }

    pub fn int(v: i128) -> Value {
        Value::rat(Rat::int(v))
    }

    pub fn ratio(num: i128, den: i128) -> Value {
        Value::rat(Rat::new(num, den).expect("nonzero denominator"))
    }

    pub fn from_f64(x: f64) -> Value {
        Value { rat: Rat::from_f64_exact(x), f: x }
    }

    pub fn parse(s: &str) -> Option<Value> {
        Rat::parse(s).map(Value::rat).or_else(|| {
            let f: f64 = s.parse().ok()?;
            Some(Value { rat: None, f })
        })
    }

    pub fn to_f64(self) -> f64 {
        self.f
    }

    pub fn is_exact(self) -> bool {
        self.rat.is_some()
    }

    fn lift2(self, o: Value, rf: impl Fn(Rat, Rat) -> Option<Rat>, ff: impl Fn(f64, f64) -> f64) -> Value {
        let rat = match (self.rat, o.rat) {
            (Some(a), Some(b)) => rf(a, b),
            _ => None,
        };
        let f = rat.map(Rat::to_f64).unwrap_or_else(|| ff(self.f, o.f));
        Value { rat, f }
    }

    pub fn add(self, o: Value) -> Value {
        self.lift2(o, Rat::add, |a, b| a + b)
    }

    pub fn sub(self, o: Value) -> Value {
        self.add(o.neg())
    }

    pub fn mul(self, o: Value) -> Value {
        self.lift2(o, Rat::mul, |a, b| a * b)
    }

    pub fn div(self, o: Value) -> Value {
        self.lift2(
            o,
            |a, b| if b.num == 0 { None } else { a.mul(Rat { num: b.den, den: b.num }).and_then(|r| Rat::new(r.num, r.den)) },
            |a, b| a / b,
        )
    }

    pub fn neg(self) -> Value {
        Value { rat: self.rat.and_then(|r| Rat::new(-r.num, r.den)), f: -self.f }
    }

    pub fn max(self, o: Value) -> Value {
        match self.cmp(o) {
            Cmp::Exact(Ordering::Less) => o,
            Cmp::Exact(_) => self,
            Cmp::Near => if self.f >= o.f { self } else { o },
        }
    }

    pub fn floor(self) -> Value {
        match self.rat {
            Some(r) => Value::int(r.floor()),
            None => Value::from_f64(self.f.floor()),
        }
    }

    pub fn cmp(self, o: Value) -> Cmp {
        if let (Some(a), Some(b)) = (self.rat, o.rat) {
            if let Some(ord) = a.cmp_exact(b) {
                return Cmp::Exact(ord);
            }
        }
        if !self.f.is_finite() || !o.f.is_finite() {
            return match self.f.partial_cmp(&o.f) {
                Some(ord) => Cmp::Exact(ord),
                None => Cmp::Near,
            };
        }
        let scale = 1.0f64.max(self.f.abs()).max(o.f.abs());
        if (self.f - o.f).abs() <= FLOAT_BOUNDARY_BAND * scale {
            Cmp::Near
        } else {
            Cmp::Exact(self.f.partial_cmp(&o.f).unwrap_or(Ordering::Equal))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cmp {
    Exact(Ordering),
    /// Within the float tolerance band; cannot certify a strict verdict.
    Near,
}

/// Lebesgue exponent in `[1, inf]`, tracked through its reciprocal.
#[derive(Debug, Clone, Copy)]
pub enum Exponent {
    Finite(Value),
    Infinity,
}

impl Exponent {
    pub fn parse(s: &str) -> Option<Exponent> {
        let t = s.trim();
        if t.eq_ignore_ascii_case("inf") || t.eq_ignore_ascii_case("infinity") || t == "∞" {
            return Some(Exponent::Infinity);
        }
        Value::parse(t).map(Exponent::Finite)
    }

    /// `1/p`; zero for the endpoint.
    pub fn inv(self) -> Value {
        match self {
            Exponent::Finite(v) => Value::int(1).div(v),
            Exponent::Infinity => Value::int(0),
        }
    }

    pub fn to_f64(self) -> f64 {
        match self {
            Exponent::Finite(v) => v.to_f64(),
            Exponent::Infinity => f64::INFINITY,
        }
    }
}

// ---------------------------------------------------------------------------
// Problem parameters and reports
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy)]
pub struct ProblemParams {
    pub n: u32,
    pub k: Option<Value>,
    pub s: Option<Value>,
    pub p: Option<Exponent>,
    pub q: Option<Exponent>,
    pub theta: Option<Value>,
    pub mu: Option<Value>,
    /// Regularity-loss parameter for the modulation nonlinear estimate.
    pub r: Option<Value>,
    pub gamma: Option<Exponent>,
}

impl ProblemParams {
    pub fn new(n: u32) -> Self {
        Self { n, k: None, s: None, p: None, q: None, theta: None, mu: None, r: None, gamma: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Status {
    Pass,
    Boundary,
    Fail,
    NotCovered,
    Incomplete,
}

#[derive(Debug, Clone, Serialize)]
pub struct IneqRecord {
    pub name: String,
    pub lhs: f64,
    pub rel: &'static str,
    pub rhs: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: &'static str,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failed: Option<IneqRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub boundary: Option<IneqRecord>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl CheckResult {
    fn new(name: &'static str) -> Self {
        Self { name, status: Status::Pass, failed: None, boundary: None, notes: Vec::new() }
    }

    fn not_covered(mut self, why: &str) -> Self {
        self.status = Status::NotCovered;
        self.notes.push(why.to_string());
        self
    }

    fn incomplete(mut self, missing: &str) -> Self {
        self.status = Status::Incomplete;
        self.notes.push(format!("missing parameter: {missing}"));
        self
    }
}

#[derive(Debug, Clone, Copy)]
enum Rel {
    Lt,
    Le,
    Gt,
    Ge,
}

impl Rel {
    fn symbol(self) -> &'static str {
        match self {
            Rel::Lt => "<",
            Rel::Le => "<=",
            Rel::Gt => ">",
            Rel::Ge => ">=",
        }
    }
}

/// Sequential condition evaluator; records the first failure or boundary.
struct Conditions {
    result: CheckResult,
}

impl Conditions {
    fn new(name: &'static str) -> Self {
        Self { result: CheckResult::new(name) }
    }

    /// Returns false once the check has failed (later conditions skipped).
    fn require(&mut self, name: &str, lhs: Value, rel: Rel, rhs: Value) -> bool {
        if self.result.status == Status::Fail {
            return false;
        }
        let record = IneqRecord {
            name: name.to_string(),
            lhs: lhs.to_f64(),
            rel: rel.symbol(),
            rhs: rhs.to_f64(),
        };
        let cmp = lhs.cmp(rhs);
        let verdict = match (rel, cmp) {
            (Rel::Lt, Cmp::Exact(Ordering::Less)) => Status::Pass,
            (Rel::Lt, Cmp::Exact(Ordering::Equal)) => Status::Boundary,
            (Rel::Lt, Cmp::Exact(Ordering::Greater)) => Status::Fail,
            (Rel::Le, Cmp::Exact(Ordering::Greater)) => Status::Fail,
            (Rel::Le, Cmp::Exact(_)) => Status::Pass,
            (Rel::Gt, Cmp::Exact(Ordering::Greater)) => Status::Pass,
            (Rel::Gt, Cmp::Exact(Ordering::Equal)) => Status::Boundary,
            (Rel::Gt, Cmp::Exact(Ordering::Less)) => Status::Fail,
            (Rel::Ge, Cmp::Exact(Ordering::Less)) => Status::Fail,
            (Rel::Ge, Cmp::Exact(_)) => Status::Pass,
            (_, Cmp::Near) => Status::Boundary,
        };
        match verdict {
            Status::Pass => true,
            Status::Boundary => {
                if self.result.boundary.is_none() {
                    self.result.boundary = Some(record);
                }
                if self.result.status == Status::Pass {
                    self.result.status = Status::Boundary;
                }
                true
            }
            _ => {
                self.result.status = Status::Fail;
                self.result.failed = Some(record);
                false
            }
        }
    }

    /// Strict positivity where equality means structural collapse (a
    /// degenerate window), not a marginal boundary: fails outright at 0.
    fn require_positive_hard(&mut self, name: &str, v: Value) -> bool {
        if self.result.status == Status::Fail {
            return false;
        }
        if matches!(v.cmp(Value::int(0)), Cmp::Exact(Ordering::Greater)) {
            true
        } else {
            self.result.status = Status::Fail;
            self.result.failed = Some(IneqRecord {
                name: name.to_string(),
                lhs: v.to_f64(),
                rel: ">",
                rhs: 0.0,
            });
            false
        }
    }

    fn note(&mut self, msg: impl Into<String>) {
        self.result.notes.push(msg.into());
    }

    fn finish(self) -> CheckResult {
        self.result
    }
}

// ---------------------------------------------------------------------------
// Derived quantities
// ---------------------------------------------------------------------------

/// `alpha = theta (n+1)(1/2 - 1/p)`, `delta = theta (n-1)(1/2 - 1/p)`.
pub fn alpha_delta(theta: Value, n: u32, p: Exponent) -> crate::Result<(Value, Value)> {
    let zero = Value::int(0);
    let one = Value::int(1);
    if !matches!(theta.cmp(zero), Cmp::Exact(Ordering::Greater) | Cmp::Exact(Ordering::Equal))
        || matches!(theta.cmp(one), Cmp::Exact(Ordering::Greater))
    {
        return Err(crate::ModkgError::ThetaOutOfRange { theta: theta.to_f64() });
    }
    let up = p.inv();
    if matches!(up.cmp(Value::ratio(1, 2)), Cmp::Exact(Ordering::Greater)) {
        return Err(crate::ModkgError::Parse("alpha/delta need p >= 2".into()));
    }
    let half_gap = Value::ratio(1, 2).sub(up);
    let alpha = theta.mul(Value::int((n + 1) as i128)).mul(half_gap);
    let delta = theta.mul(Value::int((n as i128) - 1)).mul(half_gap);
    Ok((alpha, delta))
}

fn floor_note(c: &mut Conditions, s: Value) -> Value {
    if matches!(s.cmp(Value::int(0)), Cmp::Exact(Ordering::Less)) {
        c.note("[s]: floor used for negative argument");
    }
    s.floor()
}

// ---------------------------------------------------------------------------
// The individual checks
// ---------------------------------------------------------------------------

pub fn check_theorem1(pi: &ProblemParams) -> CheckResult {
    let name = "theorem1";
    let (Some(k), Some(s), Some(p), Some(q)) = (pi.k, pi.s, pi.p, pi.q) else {
        let missing = if pi.k.is_none() {
            "k"
        } else if pi.s.is_none() {
            "s"
        } else if pi.p.is_none() {
            "p"
        } else {
            "q"
        };
        return CheckResult::new(name).incomplete(missing);
    };
    let n = Value::int(pi.n as i128);
    let (up, uq) = (p.inv(), q.inv());
    let mut c = Conditions::new(name);
    if pi.n >= 2 {
        c.note(format!(
            "rho*beta = (n+1)/(n-1) = {}, beta in (0, {})",
            (pi.n + 1) as f64 / (pi.n - 1) as f64,
            (pi.n + 1) as f64 / (2 * pi.n - 2) as f64
        ));
    } else {
        c.note("rho*beta = (n+1)/(n-1) undefined for n = 1".to_string());
    }
    let ks = floor_note(&mut c, s);
    if !c.require("k >= [s]", k, Rel::Ge, ks) {
        return c.finish();
    }
    if !c.require("2 < p", Value::ratio(1, 2), Rel::Gt, up) {
        return c.finish();
    }
    if !c.require("p < inf", up, Rel::Gt, Value::int(0)) {
        return c.finish();
    }
    if !c.require("1 <= q", Value::int(1), Rel::Ge, uq) {
        return c.finish();
    }
    if !c.require("q < inf", uq, Rel::Gt, Value::int(0)) {
        return c.finish();
    }
    let half = Value::ratio(1, 2);
    match uq.cmp(half) {
        Cmp::Exact(Ordering::Equal) | Cmp::Near => {
            return c.finish_not_covered("q = 2: theorem splits into q < 2 and q > 2");
        }
        Cmp::Exact(Ordering::Greater) => {
            // q < 2, condition n(1/q - 1/2) < 1 and window (1.3)
            let gap = n.mul(uq.sub(half));
            if !c.require("n(1/q - 1/2) < 1", gap, Rel::Lt, Value::int(1)) {
                return c.finish();
            }
            let lower1 = Value::int(1).add(n.mul(half)).sub(n.mul(uq));
            let lower2 = n.mul(half).sub(Value::int(1).div(k).mul(Value::int(1).sub(gap)));
            let lower = lower1.max(lower2);
            if !c.require("max{1 + n/2 - n/q, n/2 - (1/k)[1 - (1/q - 1/2)n]} < s", lower, Rel::Lt, s)
            {
                return c.finish();
            }
            c.require("s < n/2", s, Rel::Lt, n.mul(half));
        }
        Cmp::Exact(Ordering::Less) => {
            // q > 2, condition n(1/2 - 1/q) < 1 and window (1.4)
            let gap = n.mul(half.sub(uq));
            if !c.require("n(1/2 - 1/q) < 1", gap, Rel::Lt, Value::int(1)) {
                return c.finish();
            }
            let nq_dual = n.mul(Value::int(1).sub(uq)); // n/q'
            let lower2 = nq_dual.sub(Value::int(1).div(k).mul(Value::int(1).sub(gap)));
            let lower = Value::int(1).max(lower2);
            if !c.require("max{1, n/q' - (1/k)[1 - n(1/2 - 1/q)]} < s", lower, Rel::Lt, s) {
                return c.finish();
            }
            c.require("s < n/q'", s, Rel::Lt, nq_dual);
        }
    }
    c.finish()
}

impl Conditions {
    fn finish_not_covered(mut self, why: &str) -> CheckResult {
        self.result.status = Status::NotCovered;
        self.result.notes.push(why.to_string());
        self.result
    }
}

pub fn check_corollary1(pi: &ProblemParams) -> CheckResult {
    let name = "corollary1";
    let (Some(k), Some(s), Some(p), Some(q)) = (pi.k, pi.s, pi.p, pi.q) else {
        let missing = if pi.k.is_none() {
            "k"
        } else if pi.s.is_none() {
            "s"
        } else if pi.p.is_none() {
            "p"
        } else {
            "q"
        };
        return CheckResult::new(name).incomplete(missing);
    };
    let n = Value::int(pi.n as i128);
    let (up, uq) = (p.inv(), q.inv());
    let one = Value::int(1);
    let mut c = Conditions::new(name);
    let ks = floor_note(&mut c, s);
    if !c.require("k >= [s]", k, Rel::Ge, ks) {
        return c.finish();
    }
    if !c.require("2 <= p", Value::ratio(1, 2), Rel::Ge, up) {
        return c.finish();
    }
    if !c.require("p < inf", up, Rel::Gt, Value::int(0)) {
        return c.finish();
    }
    if !c.require("1 <= q", one, Rel::Ge, uq) {
        return c.finish();
    }
    if !c.require("q < inf", uq, Rel::Gt, Value::int(0)) {
        return c.finish();
    }
    // q in [p', p] in reciprocal form: 1/p <= 1/q <= 1 - 1/p
    if !c.require("q >= p'", one.sub(up), Rel::Ge, uq) {
        return c.finish();
    }
    if !c.require("q <= p", uq, Rel::Ge, up) {
        return c.finish();
    }
    let defect = one.sub(Value::int(2).mul(up)); // (1 - 2/p)
    if !c.require("(1 - 2/p)n < 1", defect.mul(n), Rel::Lt, one) {
        return c.finish();
    }
    let nq_dual = n.mul(one.sub(uq));
    let lower = one.sub(n.mul(uq.sub(up))).max(nq_dual.sub(one.div(k)));
    if !c.require("max{1 - n(1/q - 1/p), n/q' - 1/k} < s", lower, Rel::Lt, s) {
        return c.finish();
    }
    let upper = nq_dual.sub(one.div(k).mul(defect).mul(n));
    c.require("s < n/q' - (1/k)(1 - 2/p)n", s, Rel::Lt, upper);
    c.finish()
}

pub fn check_theorem2(pi: &ProblemParams) -> CheckResult {
    let name = "theorem2";
    let (Some(k), Some(s), Some(p), Some(q)) = (pi.k, pi.s, pi.p, pi.q) else {
        let missing = if pi.k.is_none() {
            "k"
        } else if pi.s.is_none() {
            "s"
        } else if pi.p.is_none() {
            "p"
        } else {
            "q"
        };
        return CheckResult::new(name).incomplete(missing);
    };
    let n = Value::int(pi.n as i128);
    let (up, uq) = (p.inv(), q.inv());
    let one = Value::int(1);
    let half = Value::ratio(1, 2);
    if matches!(up.cmp(half), Cmp::Exact(Ordering::Less)) {
        return CheckResult::new(name).not_covered("p > 2 outside the stated range 1 < p <= 2");
    }
    let mut c = Conditions::new(name);
    let ks = floor_note(&mut c, s);
    if !c.require("k >= [s]", k, Rel::Ge, ks) {
        return c.finish();
    }
    if !c.require("1 < p", one, Rel::Gt, up) {
        return c.finish();
    }
    if !c.require("p <= 2", up, Rel::Ge, half) {
        return c.finish();
    }
    if !c.require("1 <= q", one, Rel::Ge, uq) {
        return c.finish();
    }
    if !c.require("q < inf", uq, Rel::Gt, Value::int(0)) {
        return c.finish();
    }
    // q in [p, p'] in reciprocal form: 1 - 1/p <= 1/q <= 1/p
    if matches!(up.cmp(half), Cmp::Exact(Ordering::Equal)) {
        c.note("p = 2 forces q = 2");
    }
    if !c.require("q >= p", up, Rel::Ge, uq) {
        return c.finish();
    }
    if !c.require("q <= p'", uq, Rel::Ge, one.sub(up)) {
        return c.finish();
    }
    let defect = Value::int(2).mul(up).sub(one); // (2/p - 1)
    if !c.require("(2/p - 1)n < 1", defect.mul(n), Rel::Lt, one) {
        return c.finish();
    }
    let up_dual = one.sub(up); // 1/p'
    let nq_dual = n.mul(one.sub(uq));
    let lower = one.sub(n.mul(uq.sub(up_dual))).max(nq_dual.sub(one.div(k)));
    if !c.require("max{1 - n(1/q - 1/p'), n/q' - 1/k} < s", lower, Rel::Lt, s) {
        return c.finish();
    }
    let upper = nq_dual.sub(one.div(k).mul(one.sub(Value::int(2).mul(up_dual))).mul(n));
    c.require("s < n/q' - (1/k)(1 - 2/p')n", s, Rel::Lt, upper);
    c.finish()
}

/// Default time exponent for the global small-data result: `gamma = k + 2`.
fn theorem3_gamma(pi: &ProblemParams, k: Value) -> Value {
    match pi.gamma {
        Some(g) => g.inv(),
        None => Value::int(1).div(k.add(Value::int(2))),
    }
}

pub fn check_theorem3(pi: &ProblemParams) -> CheckResult {
    let name = "theorem3";
    let Some(theta) = pi.theta else {
        return CheckResult::new(name).incomplete("theta");
    };
    let Some(k) = pi.k else {
        return CheckResult::new(name).incomplete("k");
    };
    let n = Value::int(pi.n as i128);
    let one = Value::int(1);
    let mut c = Conditions::new(name);
    if !c.require("theta <= 1", theta, Rel::Le, one) {
        return c.finish();
    }
    // theta = 0 makes delta = 0 and gamma >= 2/delta unsatisfiable
    if !c.require_positive_hard("theta > 0", theta) {
        return c.finish();
    }
    // small-data global range: k > 4/theta + 2/n
    let threshold = Value::int(4).div(theta).add(Value::int(2).div(n));
    if !c.require("k > 4/theta + 2/n", k, Rel::Gt, threshold) {
        return c.finish();
    }
    let (Some(s), Some(p), Some(q)) = (pi.s, pi.p, pi.q) else {
        let missing = if pi.s.is_none() {
            "s"
        } else if pi.p.is_none() {
            "p"
        } else {
            "q"
        };
        let mut res = c.finish();
        if res.status == Status::Pass {
            res.status = Status::Incomplete;
        }
        res.notes.push(format!("missing parameter: {missing}"));
        return res;
    };
    let (up, uq) = (p.inv(), q.inv());
    let ks = floor_note(&mut c, s);
    if !c.require("k >= [s]", k, Rel::Ge, ks) {
        return c.finish();
    }
    if !c.require("2 <= p", Value::ratio(1, 2), Rel::Ge, up) {
        return c.finish();
    }
    if !c.require("p < inf", up, Rel::Gt, Value::int(0)) {
        return c.finish();
    }
    if !c.require("1 <= q", one, Rel::Ge, uq) {
        return c.finish();
    }
    if !c.require("q < inf", uq, Rel::Gt, Value::int(0)) {
        return c.finish();
    }
    if !c.require("q >= p'", one.sub(up), Rel::Ge, uq) {
        return c.finish();
    }
    if !c.require("q <= p", uq, Rel::Ge, up) {
        return c.finish();
    }
    let half_gap = Value::ratio(1, 2).sub(up);
    let alpha = theta.mul(Value::int((pi.n + 1) as i128)).mul(half_gap);
    let delta = theta.mul(Value::int((pi.n as i128) - 1)).mul(half_gap);
    c.note(format!("alpha = {}, delta = {}", alpha.to_f64(), delta.to_f64()));
    let defect = one.sub(Value::int(2).mul(up));
    if !c.require("(1 - 2/p)n < 1 - alpha", defect.mul(n), Rel::Lt, one.sub(alpha)) {
        return c.finish();
    }
    // gamma >= 2 v (2/delta), the stronger of the two stated forms,
    // and q in [gamma', gamma]
    let ugam = theorem3_gamma(pi, k);
    if !c.require("gamma >= 2", Value::ratio(1, 2), Rel::Ge, ugam) {
        return c.finish();
    }
    // 1/gamma <= delta/2
    if !c.require("gamma >= 2/delta", delta.mul(Value::ratio(1, 2)), Rel::Ge, ugam) {
        return c.finish();
    }
    if !c.require("q >= gamma'", one.sub(ugam), Rel::Ge, uq) {
        return c.finish();
    }
    if !c.require("q <= gamma", uq, Rel::Ge, ugam) {
        return c.finish();
    }
    let half_alpha = alpha.mul(Value::ratio(1, 2));
    let nq_dual = n.mul(one.sub(uq));
    let lower = one
        .sub(half_alpha)
        .sub(n.mul(uq.sub(up)))
        .max(nq_dual.sub(one.div(k).mul(one.sub(alpha))).add(half_alpha));
    if !c.require(
        "max{1 - alpha/2 - n(1/q - 1/p), n/q' - (1/k)(1 - alpha) + alpha/2} < s",
        lower,
        Rel::Lt,
        s,
    ) {
        return c.finish();
    }
    let upper = nq_dual.sub(one.div(k).mul(defect).mul(n)).add(half_alpha);
    c.require("s < n/q' - (1/k)(1 - 2/p)n + alpha/2", s, Rel::Lt, upper);
    c.finish()
}

pub fn check_theorem4(pi: &ProblemParams) -> CheckResult {
    let name = "theorem4";
    let Some(theta) = pi.theta else {
        return CheckResult::new(name).incomplete("theta");
    };
    let n = Value::int(pi.n as i128);
    let one = Value::int(1);
    let mut c = Conditions::new(name);
    if !c.require("theta <= 1", theta, Rel::Le, one) {
        return c.finish();
    }
    // the p-window collapses at theta = 0 (its endpoints diverge)
    if !c.require_positive_hard("theta > 0", theta) {
        return c.finish();
    }
    if pi.n < 2 {
        let mut res = c.finish();
        res.status = Status::Fail;
        res.failed = Some(IneqRecord {
            name: "p-window requires n >= 2".into(),
            lhs: pi.n as f64,
            rel: ">=",
            rhs: 2.0,
        });
        return res;
    }
    let (Some(s), Some(p), Some(q)) = (pi.s, pi.p, pi.q) else {
        let missing = if pi.s.is_none() {
            "s"
        } else if pi.p.is_none() {
            "p"
        } else {
            "q"
        };
        let mut res = c.finish();
        if res.status == Status::Pass {
            res.status = Status::Incomplete;
        }
        res.notes.push(format!("missing parameter: {missing}"));
        return res;
    };
    let (up, uq) = (p.inv(), q.inv());
    if !c.require("1 < q", one, Rel::Gt, uq) {
        return c.finish();
    }
    if !c.require("q < inf", uq, Rel::Gt, Value::int(0)) {
        return c.finish();
    }
    if !c.require("s >= 0", s, Rel::Ge, Value::int(0)) {
        return c.finish();
    }
    // p-window on (1 - 2/p): [1/(4 theta (n-1)), 1/(2 theta (n-1))),
    // the reading that reproduces the worked n = 3 lower bound of 3/4
    let defect = one.sub(Value::int(2).mul(up));
    let nm1 = Value::int((pi.n as i128) - 1);
    let lo = one.div(Value::int(4).mul(theta).mul(nm1));
    let hi = one.div(Value::int(2).mul(theta).mul(nm1));
    c.note(format!(
        "minimal admissible mu lower bound: 2n * {} = {}",
        lo.to_f64(),
        Value::int(2).mul(n).mul(lo).to_f64()
    ));
    if !c.require("(1 - 2/p) >= 1/(4 theta (n-1))", defect, Rel::Ge, lo) {
        return c.finish();
    }
    if !c.require("(1 - 2/p) < 1/(2 theta (n-1))", defect, Rel::Lt, hi) {
        return c.finish();
    }
    let Some(mu) = pi.mu else {
        let mut res = c.finish();
        if res.status == Status::Pass {
            res.status = Status::Incomplete;
        }
        res.notes.push("missing parameter: mu".into());
        return res;
    };
    let alpha = theta.mul(Value::int((pi.n + 1) as i128)).mul(Value::ratio(1, 2).sub(up));
    let mu_lower = Value::int(2).mul(n).mul(defect);
    let mu_upper = Value::int(2)
        .mul(s.add(n.mul(uq)))
        .add(one)
        .sub(Value::int(2).mul(alpha))
        .sub(n);
    c.note(format!("mu range: [{}, {}]", mu_lower.to_f64(), mu_upper.to_f64()));
    if !c.require("2n(1 - 2/p) <= mu", mu_lower, Rel::Le, mu) {
        return c.finish();
    }
    c.require("mu <= 2(s + n/q) + 1 - 2 alpha - n", mu, Rel::Le, mu_upper);
    c.finish()
}

/// Nonlinear-estimate admissibility: the plain `p != 2` form, or the wider
/// `p = 2` windows split by `q < 2` / `q > 2`.
pub fn check_lemma3(pi: &ProblemParams) -> CheckResult {
    let name = "lemma3";
    let (Some(k), Some(s), Some(p), Some(q), Some(r)) = (pi.k, pi.s, pi.p, pi.q, pi.r) else {
        let missing = if pi.k.is_none() {
            "k"
        } else if pi.s.is_none() {
            "s"
        } else if pi.p.is_none() {
            "p"
        } else if pi.q.is_none() {
            "q"
        } else {
            "r"
        };
        return CheckResult::new(name).incomplete(missing);
    };
    let n = Value::int(pi.n as i128);
    let one = Value::int(1);
    let half = Value::ratio(1, 2);
    let (up, uq) = (p.inv(), q.inv());

    let p_is_2 = matches!(up.cmp(half), Cmp::Exact(Ordering::Equal));
    let q_is_2 = matches!(uq.cmp(half), Cmp::Exact(Ordering::Equal));
    if p_is_2 && !q_is_2 {
        // Remark 6 windows
        if matches!(uq.cmp(half), Cmp::Exact(Ordering::Greater)) {
            let mut c = Conditions::new("remark6-low");
            c.note("p = 2, q < 2 variant".to_string());
            let ks = floor_note(&mut c, s.sub(r));
            if !c.require("k >= [s - r]", k, Rel::Ge, ks) {
                return c.finish();
            }
            let gap = uq.sub(half).mul(n);
            if !c.require("n(1/q - 1/2) < r", gap, Rel::Lt, r) {
                return c.finish();
            }
            let lower = r
                .add(n.mul(half))
                .sub(n.mul(uq))
                .max(n.mul(half).sub(one.div(k).mul(r.sub(gap))));
            if !c.require(
                "max{r + n/2 - n/q, n/2 - (1/k)[r - (1/q - 1/2)n]} < s",
                lower,
                Rel::Lt,
                s,
            ) {
                return c.finish();
            }
            c.require("s < n/2", s, Rel::Lt, n.mul(half));
            return c.finish();
        }
        let mut c = Conditions::new("remark6-high");
        c.note("p = 2, q > 2 variant".to_string());
        let ks = floor_note(&mut c, s.sub(r));
        if !c.require("k >= [s - r]", k, Rel::Ge, ks) {
            return c.finish();
        }
        let gap = half.sub(uq).mul(n);
        if !c.require("n(1/2 - 1/q) < r", gap, Rel::Lt, r) {
            return c.finish();
        }
        let nq_dual = n.mul(one.sub(uq));
        let lower = r.max(nq_dual.sub(one.div(k).mul(r.sub(gap))));
        if !c.require("max{r, n/q' - (1/k)[r - n(1/2 - 1/q)]} < s", lower, Rel::Lt, s) {
            return c.finish();
        }
        c.require("s < n/q'", s, Rel::Lt, nq_dual);
        return c.finish();
    }

    let mut c = Conditions::new(name);
    let ks = floor_note(&mut c, s.sub(r));
    if !c.require("k >= [s - r]", k, Rel::Ge, ks) {
        return c.finish();
    }
    if !c.require("2 <= p", half, Rel::Ge, up) {
        return c.finish();
    }
    if !c.require("p < inf", up, Rel::Gt, Value::int(0)) {
        return c.finish();
    }
    if !c.require("1 <= q", one, Rel::Ge, uq) {
        return c.finish();
    }
    if !c.require("q < inf", uq, Rel::Gt, Value::int(0)) {
        return c.finish();
    }
    if !c.require("q >= p'", one.sub(up), Rel::Ge, uq) {
        return c.finish();
    }
    if !c.require("q <= p", uq, Rel::Ge, up) {
        return c.finish();
    }
    let defect = one.sub(Value::int(2).mul(up));
    if !c.require("(1 - 2/p)n < r", defect.mul(n), Rel::Lt, r) {
        return c.finish();
    }
    let nq_dual = n.mul(one.sub(uq));
    let lower = r.sub(n.mul(uq.sub(up))).max(nq_dual.sub(r.div(k)));
    if !c.require("max{r - n(1/q - 1/p), n/q' - r/k} < s", lower, Rel::Lt, s) {
        return c.finish();
    }
    let upper = nq_dual.sub(one.div(k).mul(defect).mul(n));
    c.require("s < n/q' - (1/k)(1 - 2/p)n", s, Rel::Lt, upper);
    c.finish()
}

// ---------------------------------------------------------------------------
// Aggregate report
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct ParamsEcho {
    pub n: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct AdmissibilityReport {
    pub params: ParamsEcho,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    pub results: Vec<CheckResult>,
}

impl AdmissibilityReport {
    pub fn any_pass(&self) -> bool {
        self.results
            .iter()
            .any(|r| matches!(r.status, Status::Pass | Status::Boundary))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Run every check that has enough parameters.
pub fn full_report(pi: &ProblemParams) -> AdmissibilityReport {
    let (alpha, delta) = match (pi.theta, pi.p) {
        (Some(theta), Some(p)) => match alpha_delta(theta, pi.n, p) {
            Ok((a, d)) => (Some(a.to_f64()), Some(d.to_f64())),
            Err(_) => (None, None),
        },
        _ => (None, None),
    };
    let mut results = vec![
        check_theorem1(pi),
        check_corollary1(pi),
        check_theorem2(pi),
        check_theorem3(pi),
        check_theorem4(pi),
    ];
    if pi.r.is_some() {
        results.push(check_lemma3(pi));
    }
    AdmissibilityReport {
        params: ParamsEcho {
            n: pi.n,
            k: pi.k.map(Value::to_f64),
            s: pi.s.map(Value::to_f64),
            p: pi.p.map(Exponent::to_f64),
            q: pi.q.map(Exponent::to_f64),
            theta: pi.theta.map(Value::to_f64),
            mu: pi.mu.map(Value::to_f64),
            r: pi.r.map(Value::to_f64),
            gamma: pi.gamma.map(Exponent::to_f64),
        },
        alpha,
        delta,
        results,
    }
}

// ---------------------------------------------------------------------------
// Deterministic parameter sweep (golden-file fodder)
// ---------------------------------------------------------------------------

/// A deterministic 200-tuple sweep touching every checker, including
/// exact-boundary and near-boundary cases. Consumed by the golden-file
/// acceptance test and the CLI sweep mode.
pub fn standard_sweep() -> Vec<ProblemParams> {
    let mut rows = Vec::new();
    let v = |s: &str| Value::parse(s).unwrap();
    let e = |s: &str| Exponent::parse(s).unwrap();

    // theorem 1 grid: n x q x s (36 rows)
    for n in [1u32, 2, 3] {
        for q in ["3/2", "4/3", "3", "4"] {
            for s in ["1/2", "7/5", "13/10"] {
                let mut pi = ProblemParams::new(n);
                pi.k = Some(v("5/2"));
                pi.s = Some(v(s));
                pi.p = Some(e("4"));
                pi.q = Some(e(q));
                rows.push(pi);
            }
        }
    }
    // theorem 1 boundary family: s exactly n/2, and +/- 1e-9 (9 rows)
    for n in [1u32, 2, 3] {
        for ds in ["0", "-1/1000000000", "1/1000000000"] {
            let mut pi = ProblemParams::new(n);
            pi.k = Some(v("5/2"));
            pi.s = Some(Value::ratio(n as i128, 2).add(v(ds)));
            pi.p = Some(e("4"));
            pi.q = Some(e("3/2"));
            rows.push(pi);
        }
    }
    // q = 2 gap rows (3)
    for n in [1u32, 2, 3] {
        let mut pi = ProblemParams::new(n);
        pi.k = Some(v("5/2"));
        pi.s = Some(v("6/5"));
        pi.p = Some(e("4"));
        pi.q = Some(e("2"));
        rows.push(pi);
    }
    // corollary 1 grid: n x p x q x s (24 rows)
    for n in [1u32, 2] {
        for p in ["3", "4"] {
            for q in ["2", "5/2"] {
                for s in ["1/4", "2/5", "3/5"] {
                    let mut pi = ProblemParams::new(n);
                    pi.k = Some(v("5/2"));
                    pi.s = Some(v(s));
                    pi.p = Some(e(p));
                    pi.q = Some(e(q));
                    rows.push(pi);
                }
            }
        }
    }
    // corollary 1 violation rows: (1 - 2/p)n >= 1 and q outside [p', p] (6)
    for (n, p, q) in [
        (2u32, "4", "2"),
        (3, "3", "2"),
        (3, "4", "2"),
        (1, "4", "9"),
        (1, "4", "6/5"),
        (2, "3", "8"),
    ] {
        let mut pi = ProblemParams::new(n);
        pi.k = Some(v("5/2"));
        pi.s = Some(v("2/5"));
        pi.p = Some(e(p));
        pi.q = Some(e(q));
        rows.push(pi);
    }
    // theorem 2 grid incl. p = 2 forcing q = 2 (18 rows)
    for p in ["3/2", "2"] {
        for q in ["3/2", "2", "3"] {
            for s in ["1/4", "2/5", "11/20"] {
                let mut pi = ProblemParams::new(1);
                pi.k = Some(v("5/2"));
                pi.s = Some(v(s));
                pi.p = Some(e(p));
                pi.q = Some(e(q));
                rows.push(pi);
            }
        }
    }
    // theorem 3 k-threshold family: k = 4 + 2/n exactly and nearby (18 rows)
    for n in [1u32, 2, 3] {
        for dk in ["0", "-1/1000000000", "1/1000000000", "-1/3", "1/3", "2"] {
            let mut pi = ProblemParams::new(n);
            pi.theta = Some(v("1"));
            pi.k = Some(Value::int(4).add(Value::ratio(2, n as i128)).add(v(dk)));
            pi.s = Some(v("1/10"));
            pi.p = Some(e("4"));
            pi.q = Some(e("2"));
            rows.push(pi);
        }
    }
    // theorem 3 theta sweep (12 rows)
    for theta in ["0", "1/4", "1/2", "1"] {
        for k in ["5", "19/4", "11/2"] {
            let mut pi = ProblemParams::new(3);
            pi.theta = Some(v(theta));
            pi.k = Some(v(k));
            pi.s = Some(v("1/10"));
            pi.p = Some(e("4"));
            pi.q = Some(e("2"));
            rows.push(pi);
        }
    }
    // theorem 4 window rows, n = 3, theta = 1: (1 - 2/p) in
    // {1/8 exact, 1/8 +/- 1e-9, 3/16, 1/4, 1/16} -> p = 2/(1 - d) (24 rows)
    for d in ["1/8", "3/16", "1/4", "1/16"] {
        for q in ["21/20", "2", "4"] {
            for s in ["0", "1/2"] {
                let defect = v(d);
                let p_inv = Value::int(1).sub(defect).div(Value::int(2)); // 1/p
                let mut pi = ProblemParams::new(3);
                pi.theta = Some(v("1"));
                pi.k = Some(v("5"));
                pi.s = Some(v(s));
                pi.p = Some(Exponent::Finite(Value::int(1).div(p_inv)));
                pi.q = Some(e(q));
                pi.mu = Some(v("3/2"));
                rows.push(pi);
            }
        }
    }
    for dd in ["-1/1000000000", "1/1000000000"] {
        let defect = v("1/8").add(v(dd));
        let p_inv = Value::int(1).sub(defect).div(Value::int(2));
        let mut pi = ProblemParams::new(3);
        pi.theta = Some(v("1"));
        pi.k = Some(v("5"));
        pi.s = Some(v("0"));
        pi.p = Some(Exponent::Finite(Value::int(1).div(p_inv)));
        pi.q = Some(e("2"));
        pi.mu = Some(v("3/2"));
        rows.push(pi);
    }
    // theorem 4 theta = 0 degenerate rows (2)
    for q in ["2", "4"] {
        let mut pi = ProblemParams::new(3);
        pi.theta = Some(v("0"));
        pi.k = Some(v("5"));
        pi.s = Some(v("0"));
        pi.p = Some(e("16/7"));
        pi.q = Some(e(q));
        pi.mu = Some(v("3/2"));
        rows.push(pi);
    }
    // lemma 3 / remark 6 grid (48 rows)
    for p in ["2", "4"] {
        for q in ["3/2", "2", "3"] {
            for r in ["13/25", "3/5", "1/2", "11/10"] {
                for s in ["37/125", "1/2"] {
                    let mut pi = ProblemParams::new(1);
                    pi.k = Some(v("5/2"));
                    pi.s = Some(v(s));
                    pi.p = Some(e(p));
                    pi.q = Some(e(q));
                    pi.r = Some(v(r));
                    rows.push(pi);
                }
            }
        }
    }
    rows.truncate(200);
    assert_eq!(rows.len(), 200, "sweep must pin exactly 200 tuples");
    rows
}

/// One CSV row per (tuple, check): params, check name, status, first failed
/// inequality if any.
pub fn sweep_csv(rows: &[ProblemParams]) -> String {
    let mut out = String::from(
        "row,n,k,s,p,q,theta,mu,r,check,status,failed_name,failed_lhs,failed_rel,failed_rhs\n",
    );
    let fmt_opt = |v: Option<f64>| v.map(|x| format!("{x}")).unwrap_or_default();
    for (i, pi) in rows.iter().enumerate() {
        let report = full_report(pi);
        for res in &report.results {
            let (fname, flhs, frel, frhs) = match (&res.failed, &res.boundary) {
                (Some(f), _) => (f.name.clone(), format!("{}", f.lhs), f.rel, format!("{}", f.rhs)),
                (None, Some(b)) if res.status == Status::Boundary => {
                    (b.name.clone(), format!("{}", b.lhs), b.rel, format!("{}", b.rhs))
                }
                _ => (String::new(), String::new(), "", String::new()),
            };
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{:?},{},{},{},{}\n",
                i,
                pi.n,
                fmt_opt(pi.k.map(Value::to_f64)),
                fmt_opt(pi.s.map(Value::to_f64)),
                fmt_opt(pi.p.map(Exponent::to_f64)),
                fmt_opt(pi.q.map(Exponent::to_f64)),
                fmt_opt(pi.theta.map(Value::to_f64)),
                fmt_opt(pi.mu.map(Value::to_f64)),
                fmt_opt(pi.r.map(Value::to_f64)),
                res.name,
                res.status,
                fname,
                flhs,
                frel,
                frhs
            ));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(s: &str) -> Value {
        Value::parse(s).unwrap()
    }

    fn e(s: &str) -> Exponent {
        Exponent::parse(s).unwrap()
    }

    #[test]
    fn rational_parsing_is_exact() {
        assert_eq!(Rat::parse("5/2").unwrap().to_f64(), 2.5);
        assert_eq!(Rat::parse("1.25").unwrap(), Rat::new(5, 4).unwrap());
        assert_eq!(Rat::parse("-0.5").unwrap(), Rat::new(-1, 2).unwrap());
        assert_eq!(Rat::parse("3").unwrap(), Rat::int(3));
        assert!(Rat::parse("x").is_none());
        // 0.1 parses as the exact decimal 1/10, not the binary float
        assert_eq!(Rat::parse("0.1").unwrap(), Rat::new(1, 10).unwrap());
    }

    #[test]
    fn alpha_delta_paper_instances() {
        // theta = 1, n = 3, p = 4 -> (1, 1/2)
        let (a, d) = alpha_delta(v("1"), 3, e("4")).unwrap();
        assert_eq!(a.to_f64(), 1.0);
        assert_eq!(d.to_f64(), 0.5);
        // theta = 1, n = 2, p = inf -> (3/2, 1/2)
        let (a, d) = alpha_delta(v("1"), 2, Exponent::Infinity).unwrap();
        assert_eq!(a.to_f64(), 1.5);
        assert_eq!(d.to_f64(), 0.5);
        // theta = 0 -> (0, 0)
        let (a, d) = alpha_delta(v("0"), 3, e("4")).unwrap();
        assert_eq!(a.to_f64(), 0.0);
        assert_eq!(d.to_f64(), 0.0);
        assert!(alpha_delta(v("3/2"), 3, e("4")).is_err());
    }

    fn base_theorem1() -> ProblemParams {
        let mut pi = ProblemParams::new(3);
        pi.k = Some(v("5/2"));
        pi.s = Some(v("7/5"));
        pi.p = Some(e("4"));
        pi.q = Some(e("3/2"));
        pi
    }

    #[test]
    fn theorem1_direct_evaluation() {
        // n=3, q=3/2, k=5/2, s=1.4, p=4: bounds are max{0.5, 1.3} < 1.4 < 1.5
        let res = check_theorem1(&base_theorem1());
        assert_eq!(res.status, Status::Pass, "{res:?}");

        // s at the upper boundary n/2 exactly
        let mut pi = base_theorem1();
        pi.s = Some(v("3/2"));
        let res = check_theorem1(&pi);
        assert_eq!(res.status, Status::Boundary);

        // s above n/2 strictly
        pi.s = Some(v("8/5"));
        let res = check_theorem1(&pi);
        assert_eq!(res.status, Status::Fail);
        assert_eq!(res.failed.as_ref().unwrap().name, "s < n/2");

        // q = 2 is a stated case gap
        let mut pi = base_theorem1();
        pi.q = Some(e("2"));
        assert_eq!(check_theorem1(&pi).status, Status::NotCovered);
    }

    #[test]
    fn theorem1_boundary_flips_with_tiny_rational_perturbations() {
        let eps = Value::ratio(1, 1_000_000_000);
        let mut pi = base_theorem1();
        pi.s = Some(Value::ratio(3, 2).sub(eps));
        assert_eq!(check_theorem1(&pi).status, Status::Pass);
        pi.s = Some(Value::ratio(3, 2).add(eps));
        assert_eq!(check_theorem1(&pi).status, Status::Fail);
    }

    #[test]
    fn corollary1_violations() {
        // (1 - 2/p) n = 1 exactly degenerates the whole s-window to a point;
        // with s at that point every strict bound sits on its boundary
        let mut pi = ProblemParams::new(2);
        pi.k = Some(v("5/2"));
        pi.s = Some(v("2/5"));
        pi.p = Some(e("4"));
        pi.q = Some(e("5/3"));
        let res = check_corollary1(&pi);
        assert_eq!(res.status, Status::Boundary, "{res:?}");
        pi.q = Some(e("2"));
        pi.p = Some(e("5"));
        let res = check_corollary1(&pi);
        assert_eq!(res.status, Status::Fail);
        assert_eq!(res.failed.as_ref().unwrap().name, "(1 - 2/p)n < 1");
        // q outside [p', p]
        let mut pi = ProblemParams::new(1);
        pi.k = Some(v("5/2"));
        pi.s = Some(v("2/5"));
        pi.p = Some(e("4"));
        pi.q = Some(e("9"));
        let res = check_corollary1(&pi);
        assert_eq!(res.status, Status::Fail);
        assert_eq!(res.failed.as_ref().unwrap().name, "q <= p");
    }

    #[test]
    fn corollary1_admissible_instance() {
        // n=1, p=4, q=2, k=5/2: window max{1 - 1/4, 1/2 - 2/5} < s < 1/2 - 1/5
        // lower = max{0.75, 0.1}: empty against upper 0.3 -> tighten with q
        let mut pi = ProblemParams::new(1);
        pi.k = Some(v("5/2"));
        pi.p = Some(e("4"));
        pi.q = Some(e("5/4"));
        // 1 - n(1/q - 1/p) = 1 - (4/5 - 1/4) = 0.45; n/q' - 1/k = 0.2 - 0.4 < it
        // upper = n/q' - (1/k)(1/2) = 0.2 - 0.2 = 0 -> still empty; q=5/4 bad.
        // fall back to direct evaluation: verdict is FAIL with empty window
        pi.s = Some(v("1/2"));
        let res = check_corollary1(&pi);
        assert_eq!(res.status, Status::Fail);
    }

    #[test]
    fn theorem2_p2_forces_q2() {
        let mut pi = ProblemParams::new(1);
        pi.k = Some(v("5/2"));
        pi.s = Some(v("2/5"));
        pi.p = Some(e("2"));
        pi.q = Some(e("3"));
        let res = check_theorem2(&pi);
        assert_eq!(res.status, Status::Fail);
        assert_eq!(res.failed.as_ref().unwrap().name, "q <= p'");

        pi.q = Some(e("3/2"));
        let res = check_theorem2(&pi);
        assert_eq!(res.status, Status::Fail);
        assert_eq!(res.failed.as_ref().unwrap().name, "q >= p");

        // p > 2 -> not covered
        pi.p = Some(e("3"));
        assert_eq!(check_theorem2(&pi).status, Status::NotCovered);
    }

    #[test]
    fn theorem2_direct_instance() {
        // p = 3/2, n = 1, q = 3/2: q in [p, p'] = [3/2, 3]; (2/p - 1)n = 1/3 < 1
        // window: max{1 - (2/3 - 1/3), 1/3 - 2/5} < s < 1/3 - (1/k)(1 - 4/3)...
        let mut pi = ProblemParams::new(1);
        pi.k = Some(v("5/2"));
        pi.p = Some(e("3/2"));
        pi.q = Some(e("3/2"));
        // 1/p' = 1/3; lower = max{1 - 1(2/3 - 1/3), 1/3 - 2/5} = 2/3
        // upper = 1/3 - (2/5)(1 - 2/3) = 1/3 - 2/15 = 1/5 -> empty window: FAIL
        pi.s = Some(v("7/10"));
        let res = check_theorem2(&pi);
        assert_eq!(res.status, Status::Fail, "{res:?}");
        assert_eq!(res.failed.as_ref().unwrap().name, "s < n/q' - (1/k)(1 - 2/p')n");
    }

    #[test]
    fn theorem3_k_threshold() {
        // theta=1, n=3: threshold 4 + 2/3
        let mut pi = ProblemParams::new(3);
        pi.theta = Some(v("1"));
        pi.k = Some(v("4"));
        let res = check_theorem3(&pi);
        assert_eq!(res.status, Status::Fail);
        assert_eq!(res.failed.as_ref().unwrap().name, "k > 4/theta + 2/n");

        pi.k = Some(v("5"));
        let res = check_theorem3(&pi);
        // k-condition passes; missing s/p/q makes the rest incomplete
        assert_eq!(res.status, Status::Incomplete);
        assert!(res.failed.is_none());

        pi.k = Some(v("14/3"));
        let res = check_theorem3(&pi);
        assert_eq!(res.status, Status::Boundary);

        pi.theta = Some(v("0"));
        pi.k = Some(v("100"));
        let res = check_theorem3(&pi);
        assert_eq!(res.status, Status::Fail);
        assert_eq!(res.failed.as_ref().unwrap().name, "theta > 0");
    }

    #[test]
    fn theorem4_window_and_mu_range() {
        // n=3, theta=1, (1 - 2/p) = 1/8 -> p = 16/7; q near 1, s = 0
        let mut pi = ProblemParams::new(3);
        pi.theta = Some(v("1"));
        pi.k = Some(v("5"));
        pi.s = Some(v("0"));
        pi.p = Some(e("16/7"));
        pi.q = Some(e("21/20"));
        pi.mu = Some(v("3/2"));
        let res = check_theorem4(&pi);
        assert_eq!(res.status, Status::Pass, "{res:?}");
        // minimal lower bound note records 2n/(4 theta (n-1)) = 3/4
        assert!(res.notes.iter().any(|n| n.contains("0.75")), "{:?}", res.notes);

        // mu below the window
        pi.mu = Some(v("1/2"));
        let res = check_theorem4(&pi);
        assert_eq!(res.status, Status::Fail);
        assert_eq!(res.failed.as_ref().unwrap().name, "2n(1 - 2/p) <= mu");

        // theta = 0 collapses the p-window
        pi.theta = Some(v("0"));
        pi.mu = Some(v("3/2"));
        let res = check_theorem4(&pi);
        assert_eq!(res.status, Status::Fail);
        assert_eq!(res.failed.as_ref().unwrap().name, "theta > 0");
    }

    #[test]
    fn theorem4_mu_upper_bound_evaluates() {
        // q -> 1, s = 0: upper bound 2(s + n/q) + 1 - 2 alpha - n
        let mut pi = ProblemParams::new(3);
        pi.theta = Some(v("1"));
        pi.k = Some(v("5"));
        pi.s = Some(v("0"));
        pi.p = Some(e("16/7")); // (1 - 2/p) = 1/8, alpha = 1/4
        pi.q = Some(e("21/20"));
        pi.mu = Some(v("3"));
        let res = check_theorem4(&pi);
        // upper = 2*(3*20/21) + 1 - 1/2 - 3 = 40/7 - 5/2 = 45/14 ~ 3.214
        assert_eq!(res.status, Status::Pass, "{res:?}");
        pi.mu = Some(v("10/3"));
        let res = check_theorem4(&pi);
        assert_eq!(res.status, Status::Fail);
    }

    #[test]
    fn lemma3_routing_and_bounds() {
        // plain p != 2 instance: n=1, p=4, q=2, k=5/2, r=13/25, s=37/125
        let mut pi = ProblemParams::new(1);
        pi.k = Some(v("5/2"));
        pi.s = Some(v("37/125"));
        pi.p = Some(e("4"));
        pi.q = Some(e("2"));
        pi.r = Some(v("13/25"));
        let res = check_lemma3(&pi);
        assert_eq!(res.status, Status::Pass, "{res:?}");
        assert_eq!(res.name, "lemma3");

        // r <= (1 - 2/p)n fails
        pi.r = Some(v("2/5"));
        let res = check_lemma3(&pi);
        assert_eq!(res.status, Status::Fail);
        assert_eq!(res.failed.as_ref().unwrap().name, "(1 - 2/p)n < r");

        // p = 2, q < 2 routes to the first wide window
        let mut pi = ProblemParams::new(1);
        pi.k = Some(v("5/2"));
        pi.s = Some(v("2/5"));
        pi.p = Some(e("2"));
        pi.q = Some(e("3/2"));
        pi.r = Some(v("3/5"));
        let res = check_lemma3(&pi);
        assert_eq!(res.name, "remark6-low");

        // p = 2, q > 2 routes to the second
        pi.q = Some(e("3"));
        let res = check_lemma3(&pi);
        assert_eq!(res.name, "remark6-high");
    }

    #[test]
    fn reports_are_self_consistent() {
        // every recorded inequality re-evaluates to its stated verdict
        for pi in standard_sweep() {
            let report = full_report(&pi);
            for res in report.results {
                if let Some(f) = &res.failed {
                    let holds = match f.rel {
                        "<" => f.lhs < f.rhs,
                        "<=" => f.lhs <= f.rhs,
                        ">" => f.lhs > f.rhs,
                        ">=" => f.lhs >= f.rhs,
                        _ => unreachable!(),
                    };
                    assert!(!holds, "failed inequality re-evaluates true: {f:?}");
                }
            }
        }
    }

    #[test]
    fn sweep_is_deterministic_and_sized() {
        let a = sweep_csv(&standard_sweep());
        let b = sweep_csv(&standard_sweep());
        assert_eq!(a, b);
        assert_eq!(standard_sweep().len(), 200);
    }

    #[test]
    fn theorem3_monotone_in_k() {
        // if k passes the threshold, any larger k also passes it
        let mut pi = ProblemParams::new(2);
        pi.theta = Some(v("1"));
        pi.s = Some(v("1/10"));
        pi.p = Some(e("4"));
        pi.q = Some(e("2"));
        let threshold = 4.0 + 1.0;
        let mut passed_before = false;
        for k_num in 40..70i128 {
            let k = Value::ratio(k_num, 10);
            pi.k = Some(k);
            let res = check_theorem3(&pi);
            let k_ok = !matches!(
                (&res.failed, res.status),
                (Some(f), Status::Fail) if f.name == "k > 4/theta + 2/n"
            );
            if passed_before {
                assert!(k_ok, "monotonicity broken at k = {}", k.to_f64());
            }
            if k_ok && k.to_f64() > threshold {
                passed_before = true;
            }
        }
    }
}
