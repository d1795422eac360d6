//! Human-readable feature notation, e.g. `I[(I_c[u_0])^2(I[\xi])]`.
//!
//! `I_i[…]` is `∂_i I[…]` and `I_{c_i}[u_0]` is `∂_i I_c[u_0]`; `\omega_0`
//! may stand in for `u_0`. Whitespace and LaTeX line breaks are ignored.
//! Derivatives of order above one are written `\partial^{(a_1,a_2)}(…)` and
//! cannot be parsed back.

use super::tree::{Factor, FeatureTree};
use crate::{Error, Result};

/// Renders `tree` using `init_symbol` (`u_0`, `\omega_0`) for the initial
/// condition.
pub fn render(tree: &FeatureTree, init_symbol: &str) -> String {
    if tree.is_init() {
        return format!("I_c[{init_symbol}]");
    }
    format!("I[{}]", render_body(tree, init_symbol))
}

fn render_body(tree: &FeatureTree, init_symbol: &str) -> String {
    let mut out = String::new();
    match tree.forcing_power() {
        0 => {}
        1 => out.push_str("\\xi"),
        j => out.push_str(&format!("\\xi^{j}")),
    }
    let factors = tree.factors();
    if tree.forcing_power() == 0 && factors.len() == 1 {
        out.push_str(&render_factor(&factors[0], init_symbol));
        return out;
    }
    let mut i = 0;
    while i < factors.len() {
        let mut run = 1;
        while i + run < factors.len()
            && factors[i + run].child == factors[i].child
            && factors[i + run].deriv == factors[i].deriv
        {
            run += 1;
        }
        out.push('(');
        out.push_str(&render_factor(&factors[i], init_symbol));
        out.push(')');
        if run > 1 {
            out.push_str(&format!("^{run}"));
        }
        i += run;
    }
    out
}

fn render_factor(f: &Factor, init_symbol: &str) -> String {
    let order = f.order();
    if order == 0 {
        return render(&f.child, init_symbol);
    }
    let axis = f.deriv.iter().position(|&a| a == 1);
    match (order, axis) {
        (1, Some(i)) if f.child.is_init() => format!("I_{{c_{}}}[{init_symbol}]", i + 1),
        (1, Some(i)) => format!("I_{}[{}]", i + 1, render_body(&f.child, init_symbol)),
        _ => {
            let a: Vec<String> = f.deriv.iter().map(u32::to_string).collect();
            format!("\\partial^{{({})}}({})", a.join(","), render(&f.child, init_symbol))
        }
    }
}

/// Parses the notation for a `dim`-dimensional problem.
pub fn parse(input: &str, dim: usize) -> Result<FeatureTree> {
    let cleaned: String = input
        .replace("\\\\", "")
        .chars()
        .filter(|c| !c.is_whitespace())
        .collect();
    let mut p = Parser {
        s: &cleaned,
        pos: 0,
        dim,
    };
    let f = p.factor()?;
    if p.pos != cleaned.len() {
        return Err(p.err("trailing input"));
    }
    if f.order() != 0 {
        return Err(p.err("a feature cannot be a bare derivative"));
    }
    Ok(f.child)
}

struct Parser<'a> {
    s: &'a str,
    pos: usize,
    dim: usize,
}

impl Parser<'_> {
    fn err(&self, msg: &str) -> Error {
        Error::Parse {
            input: self.s.to_string(),
            pos: self.pos,
            msg: msg.to_string(),
        }
    }

    fn rest(&self) -> &str {
        &self.s[self.pos..]
    }

    fn eat(&mut self, lit: &str) -> bool {
        if self.rest().starts_with(lit) {
            self.pos += lit.len();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, lit: &str) -> Result<()> {
        if self.eat(lit) {
            Ok(())
        } else {
            Err(self.err(&format!("expected `{lit}`")))
        }
    }

    fn digits(&mut self) -> Result<u32> {
        let braced = self.eat("{");
        let start = self.pos;
        while self.rest().starts_with(|c: char| c.is_ascii_digit()) {
            self.pos += 1;
        }
        let n = self.s[start..self.pos]
            .parse()
            .map_err(|_| self.err("expected a number"))?;
        if braced {
            self.expect("}")?;
        }
        Ok(n)
    }

    fn exponent(&mut self) -> Result<u32> {
        if self.eat("^") {
            self.digits()
        } else {
            Ok(1)
        }
    }

    fn axis(&mut self) -> Result<usize> {
        let i = self.digits()? as usize;
        if i == 0 || i > self.dim {
            return Err(self.err(&format!("derivative axis {i} out of range for d = {}", self.dim)));
        }
        Ok(i - 1)
    }

    fn init_symbol(&mut self) -> Result<()> {
        if self.eat("u_0") || self.eat("\\omega_0") || self.eat("u0") {
            Ok(())
        } else {
            Err(self.err("expected `u_0` or `\\omega_0`"))
        }
    }

    fn unit(&self, axis: Option<usize>) -> Vec<u32> {
        let mut a = vec![0; self.dim];
        if let Some(i) = axis {
            a[i] = 1;
        }
        a
    }

    /// One feature, possibly differentiated.
    fn factor(&mut self) -> Result<Factor> {
        if self.eat("I_c[") {
            self.init_symbol()?;
            self.expect("]")?;
            return Ok(Factor::plain(FeatureTree::init(), self.dim));
        }
        if self.eat("I_{c_") {
            let axis = self.axis()?;
            self.expect("}[")?;
            self.init_symbol()?;
            self.expect("]")?;
            return Ok(Factor {
                deriv: self.unit(Some(axis)),
                child: FeatureTree::init(),
            });
        }
        let axis = if self.eat("I[") {
            None
        } else if self.eat("I_") {
            let a = self.axis()?;
            self.expect("[")?;
            Some(a)
        } else {
            return Err(self.err("expected a feature"));
        };
        let child = self.body()?;
        self.expect("]")?;
        Ok(Factor {
            deriv: self.unit(axis),
            child,
        })
    }

    fn body(&mut self) -> Result<FeatureTree> {
        let mut j = 0;
        let mut factors = Vec::new();
        loop {
            if self.rest().starts_with(']') || self.rest().is_empty() {
                break;
            }
            if self.eat("\\xi") {
                j += self.exponent()?;
            } else if self.eat("(") {
                let f = self.factor()?;
                self.expect(")")?;
                let k = self.exponent()?;
                factors.extend(std::iter::repeat(f).take(k as usize));
            } else {
                factors.push(self.factor()?);
            }
        }
        if j == 0 && factors.is_empty() {
            return Err(self.err("empty integrand"));
        }
        Ok(FeatureTree::integral(j, factors))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_paper_style_features() {
        let t = parse(r"I[(I_c[u_0])^2(I[\xi])]", 1).unwrap();
        assert_eq!(t.key(), "I[(0|I[xi^1]),(0|Ic),(0|Ic)]");
        let m = parse(r"I[\xi(I_c[u_0])]", 1).unwrap();
        assert_eq!(m.key(), "I[xi^1;(0|Ic)]");
        let n = parse(r"I[(I_{c_2}[\omega_0])(I_1[\xi])]", 2).unwrap();
        assert_eq!(n.key(), "I[(1.0|I[xi^1]),(0.1|Ic)]");
        assert_eq!(parse(r"I[I[\xi]]", 1).unwrap().key(), "I[(0|I[xi^1])]");
        assert_eq!(parse(r"I_c[u_0]", 1).unwrap().key(), "Ic");
    }

    #[test]
    fn rejects_bad_input() {
        assert!(parse(r"I_1[\xi]", 2).is_err());
        assert!(parse(r"I_3[\xi]", 2).is_err());
        assert!(parse(r"I[]", 1).is_err());
        assert!(parse(r"I[\xi", 1).is_err());
        assert!(parse(r"I[I_1[i]]", 2).is_err());
    }

    #[test]
    fn render_round_trips() {
        for (s, d) in [
            (r"I[(I_c[u_0])^2(I[\xi])]", 1),
            (r"I[\xi(I[\xi(I[\xi])])]", 1),
            (r"I[(I[I[\xi]])^2(I[\xi])]", 1),
            (r"I[(I_{c_1}[\omega_0])(I_2[\xi])]", 2),
            (r"I[I_1[\xi]]", 2),
        ] {
            let t = parse(s, d).unwrap();
            let r = render(&t, if d == 2 { r"\omega_0" } else { "u_0" });
            assert_eq!(parse(&r, d).unwrap(), t, "{s} -> {r}");
        }
        let t = parse(r"I[\xi]", 1).unwrap();
        assert_eq!(render(&t, "u_0"), r"I[\xi]");
    }
}
