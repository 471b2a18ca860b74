//! Polynomial test forms on R³ₓ × R³_y.
//!
//! Scalars are written as sums of monomials in `x1 x2 x3 y1 y2 y3`, e.g.
//! `1 + x1^2` or `2*x1*y3 - 0.5`. A 1-form lists its nonzero coefficients by
//! differential, e.g. `dx2 = x3; dy1 = x1*y2`.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::multilinear::Vec3;

#[derive(Debug, Error, Clone, PartialEq)]
#[error("cannot parse `{input}`: {reason}")]
pub struct FormParseError {
    pub input: String,
    pub reason: String,
}

fn perr(input: &str, reason: impl Into<String>) -> FormParseError {
    FormParseError { input: input.to_string(), reason: reason.into() }
}

const VARS: [&str; 6] = ["x1", "x2", "x3", "y1", "y2", "y3"];

/// Polynomial in the six coordinates `(x, y)`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Poly6 {
    terms: Vec<(f64, [u32; 6])>,
}

impl Poly6 {
    pub fn constant(c: f64) -> Self {
        Self { terms: vec![(c, [0; 6])] }
    }

    pub fn eval(&self, x: Vec3, y: Vec3) -> f64 {
        let z = [x.x, x.y, x.z, y.x, y.y, y.z];
        self.terms
            .iter()
            .map(|(c, e)| c * (0..6).map(|k| z[k].powi(e[k] as i32)).product::<f64>())
            .sum()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.iter().all(|(c, _)| *c == 0.0)
    }
}

impl FromStr for Poly6 {
    type Err = FormParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        if compact.is_empty() {
            return Err(perr(s, "empty polynomial"));
        }
        // Split into signed terms, ignoring signs inside exponents of floats (1e-3).
        let mut pieces = Vec::new();
        let mut cur = String::new();
        let bytes: Vec<char> = compact.chars().collect();
        for (i, &ch) in bytes.iter().enumerate() {
            let exp_sign = i > 0 && matches!(bytes[i - 1], 'e' | 'E') && i > 1 && bytes[i - 2].is_ascii_digit();
            if (ch == '+' || ch == '-') && i > 0 && !exp_sign {
                pieces.push(std::mem::take(&mut cur));
            }
            cur.push(ch);
        }
        pieces.push(cur);

        let mut terms = Vec::new();
        for piece in pieces {
            let (sign, body) = match piece.strip_prefix('-') {
                Some(rest) => (-1.0, rest),
                None => (1.0, piece.strip_prefix('+').unwrap_or(&piece)),
            };
            if body.is_empty() {
                return Err(perr(s, "dangling sign"));
            }
            let mut coef = sign;
            let mut exps = [0u32; 6];
            for factor in body.split('*') {
                let (base, power) = match factor.split_once('^') {
                    Some((b, p)) => (b, p.parse::<u32>().map_err(|_| perr(s, format!("bad exponent in `{factor}`")))?),
                    None => (factor, 1),
                };
                if let Some(k) = VARS.iter().position(|v| *v == base) {
                    exps[k] += power;
                } else {
                    let c: f64 = base.parse().map_err(|_| perr(s, format!("unknown factor `{base}`")))?;
                    coef *= c.powi(power as i32);
                }
            }
            terms.push((coef, exps));
        }
        Ok(Self { terms })
    }
}

impl fmt::Display for Poly6 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (n, (c, e)) in self.terms.iter().enumerate() {
            match (n, c.is_sign_negative()) {
                (0, _) => write!(f, "{c:?}")?,
                (_, true) => write!(f, " - {:?}", -c)?,
                (_, false) => write!(f, " + {c:?}")?,
            }
            for (k, &p) in e.iter().enumerate() {
                match p {
                    0 => {}
                    1 => write!(f, "*{}", VARS[k])?,
                    _ => write!(f, "*{}^{p}", VARS[k])?,
                }
            }
        }
        Ok(())
    }
}

/// 1-form `Σ_a ω_a df^a` on R³ₓ ⊕ R³_y, `f⁰..f² = x`, `f³..f⁵ = y`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct OneForm6 {
    pub coeffs: [Poly6; 6],
}

const DIFFS: [&str; 6] = ["dx1", "dx2", "dx3", "dy1", "dy2", "dy3"];

impl OneForm6 {
    pub fn eval(&self, x: Vec3, y: Vec3) -> [f64; 6] {
        std::array::from_fn(|a| self.coeffs[a].eval(x, y))
    }
}

impl FromStr for OneForm6 {
    type Err = FormParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut out = OneForm6::default();
        for part in s.split(';').map(str::trim).filter(|p| !p.is_empty()) {
            let (d, poly) = part.split_once('=').ok_or_else(|| perr(s, format!("expected `dxk = poly` in `{part}`")))?;
            let a = DIFFS
                .iter()
                .position(|v| *v == d.trim())
                .ok_or_else(|| perr(s, format!("unknown differential `{}`", d.trim())))?;
            if !out.coeffs[a].terms.is_empty() {
                return Err(perr(s, format!("differential `{}` given twice", DIFFS[a])));
            }
            out.coeffs[a] = poly.parse()?;
        }
        if out.coeffs.iter().all(Poly6::is_zero) {
            return Err(perr(s, "the 1-form has no nonzero coefficient"));
        }
        Ok(out)
    }
}

impl fmt::Display for OneForm6 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = (0..6)
            .filter(|&a| !self.coeffs[a].terms.is_empty())
            .map(|a| format!("{} = {}", DIFFS[a], self.coeffs[a]))
            .collect();
        f.write_str(&parts.join("; "))
    }
}

/// Scalar weight `g ≥ 0` and 1-form `ω` used by the current pairings.
#[derive(Clone, Debug, PartialEq)]
pub struct TestForms {
    pub g: Poly6,
    pub omega: OneForm6,
}

impl Default for TestForms {
    /// `g = 1 + x1²`, `ω = x3 dx2`.
    fn default() -> Self {
        Self { g: "1 + x1^2".parse().expect("valid"), omega: "dx2 = x3".parse().expect("valid") }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_parsing_and_evaluation() {
        let p: Poly6 = "2*x1*y3^2 - 0.5 + x2".parse().unwrap();
        let x = Vec3::new(1.5, -2.0, 0.0);
        let y = Vec3::new(0.0, 0.0, 3.0);
        assert_eq!(p.eval(x, y), 2.0 * 1.5 * 9.0 - 0.5 - 2.0);
        let q: Poly6 = "1e-3*x1 + 2".parse().unwrap();
        assert!((q.eval(Vec3::E1, Vec3::ZERO) - 2.001).abs() < 1e-15);
        assert!("x4".parse::<Poly6>().is_err());
        assert!("x1^a".parse::<Poly6>().is_err());
        assert!("".parse::<Poly6>().is_err());
    }

    #[test]
    fn display_round_trips() {
        let p: Poly6 = "3*x1^2*y2 - x3 + 1".parse().unwrap();
        let back: Poly6 = p.to_string().parse().unwrap();
        let (x, y) = (Vec3::new(0.3, -1.1, 2.0), Vec3::new(0.5, 0.25, -0.7));
        assert_eq!(p.eval(x, y), back.eval(x, y));
    }

    #[test]
    fn one_form_parsing() {
        let w: OneForm6 = "dx2 = x3; dy1 = x1*y2".parse().unwrap();
        let v = w.eval(Vec3::new(2.0, 0.0, 5.0), Vec3::new(0.0, 3.0, 0.0));
        assert_eq!(v, [0.0, 5.0, 0.0, 6.0, 0.0, 0.0]);
        assert!("dz1 = 1".parse::<OneForm6>().is_err());
        assert!("dx1 = 0".parse::<OneForm6>().is_err());
        assert!("dx1 = 1; dx1 = 2".parse::<OneForm6>().is_err());
        let back: OneForm6 = w.to_string().parse().unwrap();
        assert_eq!(back.eval(Vec3::E1, Vec3::E2), w.eval(Vec3::E1, Vec3::E2));
    }
}
