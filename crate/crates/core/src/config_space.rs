//! Categorical solver parameters, their one-hot binary encoding, and the
//! linear system `Ac ≤ d` that cuts the valid configurations out of
//! `{0,1}^s`.
//!
//! Constraint arithmetic is exact: coefficients are `i64` rationals and a row
//! is satisfied only if `A_i·c ≤ d_i` holds without any tolerance.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::ops::Range;

pub use num_rational::Rational64;
use num_traits::{CheckedAdd, CheckedMul, One, Zero};

use crate::error::{Error, Result};

/// Default upper bound on the size of the configuration space that
/// [`enumerate_feasible`] will walk.
pub const DEFAULT_ENUMERATION_CAP: u128 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Parameter {
    pub name: String,
    pub settings: Vec<String>,
}

impl Parameter {
    pub fn new(name: impl Into<String>, settings: impl IntoIterator<Item = impl Into<String>>) -> Self {
        Self {
            name: name.into(),
            settings: settings.into_iter().map(Into::into).collect(),
        }
    }

    /// Parameter with settings labelled `0..n`.
    pub fn numbered(name: impl Into<String>, num_settings: usize) -> Self {
        Self {
            name: name.into(),
            settings: (0..num_settings).map(|i| i.to_string()).collect(),
        }
    }

    pub fn num_settings(&self) -> usize {
        self.settings.len()
    }
}

/// Ordered list of categorical parameters. The binary dimension `s` is the
/// total number of settings; parameter `i` owns the contiguous bit block
/// returned by [`ParameterSchema::block`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParameterSchema {
    parameters: Vec<Parameter>,
    offsets: Vec<usize>,
    dimension: usize,
}

impl ParameterSchema {
    pub fn new(parameters: Vec<Parameter>) -> Result<Self> {
        if parameters.is_empty() {
            return Err(Error::Schema("schema has no parameters".into()));
        }
        let mut names = BTreeSet::new();
        let mut offsets = Vec::with_capacity(parameters.len());
        let mut dimension = 0;
        for p in &parameters {
            if !names.insert(p.name.as_str()) {
                return Err(Error::Schema(format!("duplicate parameter name `{}`", p.name)));
            }
            if p.settings.len() < 2 {
                return Err(Error::Schema(format!(
                    "parameter `{}` needs at least 2 settings, has {}",
                    p.name,
                    p.settings.len()
                )));
            }
            let labels: BTreeSet<&str> = p.settings.iter().map(String::as_str).collect();
            if labels.len() != p.settings.len() {
                return Err(Error::Schema(format!(
                    "parameter `{}` has duplicate setting labels",
                    p.name
                )));
            }
            offsets.push(dimension);
            dimension += p.settings.len();
        }
        Ok(Self {
            parameters,
            offsets,
            dimension,
        })
    }

    /// Binary dimension `s`.
    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn parameters(&self) -> &[Parameter] {
        &self.parameters
    }

    pub fn len(&self) -> usize {
        self.parameters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parameters.is_empty()
    }

    /// Bit positions of parameter `index`.
    pub fn block(&self, index: usize) -> Range<usize> {
        let start = self.offsets[index];
        start..start + self.parameters[index].settings.len()
    }

    pub fn parameter_index(&self, name: &str) -> Option<usize> {
        self.parameters.iter().position(|p| p.name == name)
    }

    /// Bit position of `(parameter, setting)`.
    pub fn bit_index(&self, parameter: &str, setting: &str) -> Result<usize> {
        let p = self
            .parameter_index(parameter)
            .ok_or_else(|| Error::Schema(format!("unknown parameter `{parameter}`")))?;
        let k = self.parameters[p]
            .settings
            .iter()
            .position(|s| s == setting)
            .ok_or_else(|| Error::Schema(format!("parameter `{parameter}` has no setting `{setting}`")))?;
        Ok(self.offsets[p] + k)
    }

    /// Number of schema-valid configurations, `Π num_settings`.
    pub fn space_size(&self) -> u128 {
        self.parameters
            .iter()
            .map(|p| p.settings.len() as u128)
            .fold(1u128, |acc, n| acc.saturating_mul(n))
    }
}

/// A binary configuration vector `c ∈ {0,1}^s`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Configuration(Vec<u8>);

impl Configuration {
    pub fn from_bits(bits: Vec<u8>) -> Result<Self> {
        if let Some(b) = bits.iter().find(|&&b| b > 1) {
            return Err(Error::Argument(format!("configuration bit must be 0 or 1, found {b}")));
        }
        Ok(Self(bits))
    }

    pub fn bits(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Bits as `f64`, for use as model input.
    pub fn to_f64(&self) -> impl Iterator<Item = f64> + '_ {
        self.0.iter().map(|&b| f64::from(b))
    }
}

impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in &self.0 {
            write!(f, "{b}")?;
        }
        Ok(())
    }
}

/// Canonical identifier of a schema-valid configuration: the chosen setting
/// indices joined by `-`, e.g. `1-2`.
pub fn settings_key(settings: &[usize]) -> String {
    let mut out = String::new();
    for (i, s) in settings.iter().enumerate() {
        if i > 0 {
            out.push('-');
        }
        out.push_str(&s.to_string());
    }
    out
}

pub fn parse_settings_key(key: &str) -> Result<Vec<usize>> {
    key.split('-')
        .map(|part| {
            part.trim()
                .parse::<usize>()
                .map_err(|_| Error::Argument(format!("malformed configuration id `{key}`")))
        })
        .collect()
}

pub fn encode_configuration(schema: &ParameterSchema, settings: &[usize]) -> Result<Configuration> {
    if settings.len() != schema.len() {
        return Err(Error::Schema(format!(
            "expected {} setting indices, got {}",
            schema.len(),
            settings.len()
        )));
    }
    let mut bits = vec![0u8; schema.dimension()];
    for (i, (&k, p)) in settings.iter().zip(schema.parameters()).enumerate() {
        if k >= p.num_settings() {
            return Err(Error::Schema(format!(
                "setting index {k} out of range for parameter `{}` ({} settings)",
                p.name,
                p.num_settings()
            )));
        }
        bits[schema.block(i).start + k] = 1;
    }
    Ok(Configuration(bits))
}

pub fn decode_configuration(schema: &ParameterSchema, c: &Configuration) -> Result<Vec<usize>> {
    if c.len() != schema.dimension() {
        return Err(Error::Dimension {
            expected: schema.dimension(),
            found: c.len(),
        });
    }
    let mut settings = Vec::with_capacity(schema.len());
    for (i, p) in schema.parameters().iter().enumerate() {
        let block = &c.bits()[schema.block(i)];
        let mut chosen = None;
        for (k, &b) in block.iter().enumerate() {
            if b == 1 {
                if chosen.is_some() {
                    return Err(Error::Decode {
                        parameter: p.name.clone(),
                    });
                }
                chosen = Some(k);
            }
        }
        settings.push(chosen.ok_or_else(|| Error::Decode {
            parameter: p.name.clone(),
        })?);
    }
    Ok(settings)
}

/// One term `coeff · c_{parameter=setting}` of a linear inequality.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Term {
    pub parameter: String,
    pub setting: String,
    pub coeff: Rational64,
}

impl Term {
    pub fn new(parameter: impl Into<String>, setting: impl Into<String>, coeff: i64) -> Self {
        Self {
            parameter: parameter.into(),
            setting: setting.into(),
            coeff: Rational64::from_integer(coeff),
        }
    }
}

/// `Σ terms ≤ rhs` over named parameter settings.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinearInequality {
    pub label: String,
    pub terms: Vec<Term>,
    pub rhs: Rational64,
}

impl LinearInequality {
    pub fn new(label: impl Into<String>, terms: Vec<Term>, rhs: i64) -> Self {
        Self {
            label: label.into(),
            terms,
            rhs: Rational64::from_integer(rhs),
        }
    }

    /// `parameter = if_setting` implies `other = then_setting`, encoded as
    /// `c_{parameter,if_setting} − c_{other,then_setting} ≤ 0`.
    pub fn implication(
        label: impl Into<String>,
        (parameter, if_setting): (&str, &str),
        (other, then_setting): (&str, &str),
    ) -> Self {
        Self::new(
            label,
            vec![Term::new(parameter, if_setting, 1), Term::new(other, then_setting, -1)],
            0,
        )
    }
}

/// Dense `A` (rows × s) and `d`, with one label per row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConstraintSystem {
    a: Vec<Vec<Rational64>>,
    d: Vec<Rational64>,
    labels: Vec<String>,
    columns: usize,
}

impl ConstraintSystem {
    pub fn new(columns: usize, a: Vec<Vec<Rational64>>, d: Vec<Rational64>, labels: Vec<String>) -> Result<Self> {
        if a.len() != d.len() {
            return Err(Error::Dimension {
                expected: a.len(),
                found: d.len(),
            });
        }
        if labels.len() != a.len() {
            return Err(Error::Dimension {
                expected: a.len(),
                found: labels.len(),
            });
        }
        if let Some(row) = a.iter().find(|row| row.len() != columns) {
            return Err(Error::Dimension {
                expected: columns,
                found: row.len(),
            });
        }
        Ok(Self { a, d, labels, columns })
    }

    pub fn a(&self) -> &[Vec<Rational64>] {
        &self.a
    }

    pub fn d(&self) -> &[Rational64] {
        &self.d
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn row_count(&self) -> usize {
        self.a.len()
    }

    pub fn columns(&self) -> usize {
        self.columns
    }

    /// Index of the first violated row, if any.
    pub fn first_violation(&self, c: &Configuration) -> Result<Option<usize>> {
        if c.len() != self.columns {
            return Err(Error::Dimension {
                expected: self.columns,
                found: c.len(),
            });
        }
        for (i, (row, rhs)) in self.a.iter().zip(&self.d).enumerate() {
            let mut lhs = Rational64::zero();
            for (coeff, &bit) in row.iter().zip(c.bits()) {
                if bit == 1 {
                    lhs = lhs
                        .checked_add(coeff)
                        .ok_or_else(|| Error::Argument(format!("arithmetic overflow in row `{}`", self.labels[i])))?;
                }
            }
            if lhs > *rhs {
                return Ok(Some(i));
            }
        }
        Ok(None)
    }
}

/// One-hot rows for every parameter (as `Σ block ≤ 1` and `−Σ block ≤ −1`),
/// followed by `extra` in the given order.
pub fn build_constraints(schema: &ParameterSchema, extra: &[LinearInequality]) -> Result<ConstraintSystem> {
    let s = schema.dimension();
    let mut a = Vec::with_capacity(2 * schema.len() + extra.len());
    let mut d = Vec::with_capacity(a.capacity());
    let mut labels = Vec::with_capacity(a.capacity());
    let one = Rational64::one();
    for (i, p) in schema.parameters().iter().enumerate() {
        let mut upper = vec![Rational64::zero(); s];
        let mut lower = vec![Rational64::zero(); s];
        for j in schema.block(i) {
            upper[j] = one;
            lower[j] = -one;
        }
        a.push(upper);
        d.push(one);
        labels.push(format!("onehot_max:{}", p.name));
        a.push(lower);
        d.push(-one);
        labels.push(format!("onehot_min:{}", p.name));
    }
    for ineq in extra {
        let mut row = vec![Rational64::zero(); s];
        for term in &ineq.terms {
            let j = schema.bit_index(&term.parameter, &term.setting)?;
            row[j] = row[j]
                .checked_add(&term.coeff)
                .ok_or_else(|| Error::Argument(format!("arithmetic overflow in row `{}`", ineq.label)))?;
        }
        a.push(row);
        d.push(ineq.rhs);
        labels.push(ineq.label.clone());
    }
    ConstraintSystem::new(s, a, d, labels)
}

pub fn is_feasible(cs: &ConstraintSystem, c: &Configuration) -> Result<bool> {
    Ok(cs.first_violation(c)?.is_none())
}

/// All schema-valid configurations satisfying `cs`, in lexicographic order of
/// their setting indices (first parameter most significant).
pub fn enumerate_feasible(schema: &ParameterSchema, cs: &ConstraintSystem) -> Result<Vec<Configuration>> {
    enumerate_feasible_capped(schema, cs, DEFAULT_ENUMERATION_CAP)
}

pub fn enumerate_feasible_capped(
    schema: &ParameterSchema,
    cs: &ConstraintSystem,
    cap: u128,
) -> Result<Vec<Configuration>> {
    if cs.columns() != schema.dimension() {
        return Err(Error::Dimension {
            expected: schema.dimension(),
            found: cs.columns(),
        });
    }
    let count = schema.space_size();
    if count > cap {
        return Err(Error::EnumerationCap { count, cap });
    }

    // Integer-scaled rows make the inner loop plain i128 additions: each row
    // is multiplied by the lcm of its denominators.
    let rows = cs
        .a()
        .iter()
        .zip(cs.d())
        .map(|(row, rhs)| scale_row(row, rhs))
        .collect::<Result<Vec<_>>>()?;

    let mut out = Vec::new();
    let mut settings = vec![0usize; schema.len()];
    'walk: loop {
        let c = encode_configuration(schema, &settings)?;
        let feasible = rows.iter().all(|(row, rhs)| {
            let lhs: i128 = row.iter().zip(c.bits()).filter(|(_, &b)| b == 1).map(|(a, _)| *a).sum();
            lhs <= *rhs
        });
        if feasible {
            out.push(c);
        }
        for i in (0..settings.len()).rev() {
            settings[i] += 1;
            if settings[i] < schema.parameters()[i].num_settings() {
                continue 'walk;
            }
            settings[i] = 0;
        }
        break;
    }
    Ok(out)
}

fn scale_row(row: &[Rational64], rhs: &Rational64) -> Result<(Vec<i128>, i128)> {
    let overflow = || Error::Argument("constraint coefficients overflow when scaled to integers".into());
    let mut lcm: i64 = 1;
    for v in row.iter().chain(core::iter::once(rhs)) {
        let den = *v.denom();
        lcm = lcm.checked_mul(den / gcd(lcm, den)).ok_or_else(overflow)?;
    }
    let lcm_r = Rational64::from_integer(lcm);
    let to_int = |v: &Rational64| -> Result<i128> {
        let scaled = v.checked_mul(&lcm_r).ok_or_else(overflow)?;
        Ok(i128::from(*scaled.numer()))
    };
    let scaled = row.iter().map(to_int).collect::<Result<Vec<_>>>()?;
    Ok((scaled, to_int(rhs)?))
}

fn gcd(mut a: i64, mut b: i64) -> i64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a.abs()
}
