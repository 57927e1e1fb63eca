//! Distributions over `{0,1}^n` represented by their one-edge marginals.
//!
//! A marginal tree assigns to every true prefix `w` the probability `f(w)` of
//! the edge `w → w1`. The mass of `x` is the product of the `n` edge
//! probabilities along its path, so every marginal function defines a
//! distribution and the masses always sum to one.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bits::{BitString, Prefix};
use crate::error::{domain, Error, Result};

/// Largest `n` for which an explicit table is stored or enumerated.
pub const MAX_TABLE_N: usize = 24;

type MarginalFn = dyn Fn(&Prefix) -> f64 + Send + Sync;

#[derive(Clone)]
enum Backing {
    /// `f` in heap order, `2^n - 1` entries.
    Table(Arc<[f64]>),
    /// A pure function of the prefix, for `n` too large to tabulate.
    Generator(Arc<MarginalFn>),
}

#[derive(Clone)]
pub struct MarginalTree {
    n: usize,
    backing: Backing,
}

impl fmt::Debug for MarginalTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.backing {
            Backing::Table(t) => f
                .debug_struct("MarginalTree")
                .field("n", &self.n)
                .field("f", t)
                .finish(),
            Backing::Generator(_) => f
                .debug_struct("MarginalTree")
                .field("n", &self.n)
                .field("f", &"<generator>")
                .finish(),
        }
    }
}

fn check_probability(p: f64, what: &str) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return domain(format!("{what} = {p} is not a probability"));
    }
    Ok(())
}

impl MarginalTree {
    /// Builds a table-backed tree from marginals listed in heap order
    /// (see [`Prefix::heap_index`]).
    pub fn from_table(n: usize, f: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return domain("n must be positive");
        }
        if n > MAX_TABLE_N {
            return Err(Error::Capability {
                what: "table-backed tree length n",
                got: n,
                limit: MAX_TABLE_N,
            });
        }
        if f.len() != (1 << n) - 1 {
            return domain(format!(
                "expected {} marginals for n = {n}, got {}",
                (1usize << n) - 1,
                f.len()
            ));
        }
        for (i, &p) in f.iter().enumerate() {
            check_probability(p, &format!("f({})", Prefix::from_heap_index(i)))?;
        }
        Ok(Self {
            n,
            backing: Backing::Table(f.into()),
        })
    }

    /// Builds a generator-backed tree. `f` must be deterministic and return
    /// values in `[0,1]`; this is checked on every evaluation in debug builds.
    pub fn from_fn(n: usize, f: impl Fn(&Prefix) -> f64 + Send + Sync + 'static) -> Self {
        assert!(n > 0, "n must be positive");
        Self {
            n,
            backing: Backing::Generator(Arc::new(f)),
        }
    }

    pub fn uniform(n: usize) -> Self {
        Self::from_fn(n, |_| 0.5)
    }

    /// The point mass at `x`.
    pub fn point_mass(x: &BitString) -> Self {
        let target = x.clone();
        Self::from_fn(x.len(), move |w| {
            if w.is_prefix_of(&target) {
                target.bit(w.len()) as u8 as f64
            } else {
                0.5
            }
        })
    }

    /// Independent bits with `Pr[x_i = 1] = ps[i]`.
    pub fn product(ps: &[f64]) -> Result<Self> {
        for (i, &p) in ps.iter().enumerate() {
            check_probability(p, &format!("p[{i}]"))?;
        }
        let ps: Arc<[f64]> = ps.into();
        Ok(Self::from_fn(ps.len(), move |w| ps[w.len()]))
    }

    /// A table-backed tree with every marginal uniform in `[lo, hi]`.
    pub fn random<R: Rng + ?Sized>(n: usize, lo: f64, hi: f64, rng: &mut R) -> Result<Self> {
        check_probability(lo, "lo")?;
        check_probability(hi, "hi")?;
        if lo > hi {
            return domain(format!("empty marginal range [{lo}, {hi}]"));
        }
        if n == 0 || n > MAX_TABLE_N {
            return Err(Error::Capability {
                what: "table-backed tree length n",
                got: n,
                limit: MAX_TABLE_N,
            });
        }
        let f = (0..(1usize << n) - 1)
            .map(|_| lo + (hi - lo) * rng.random::<f64>())
            .collect();
        Self::from_table(n, f)
    }

    /// Derives the marginal tree of an explicit mass vector over `{0,1}^n`
    /// (index order). Zero-mass nodes get `f = 0`.
    pub fn from_masses(n: usize, masses: &[f64]) -> Result<Self> {
        if masses.len() != 1 << n {
            return domain(format!("expected {} masses, got {}", 1usize << n, masses.len()));
        }
        // cylinder masses bottom-up in heap order; leaves occupy the last 2^n slots
        let inner = (1usize << n) - 1;
        let mut node = vec![0.0; inner + masses.len()];
        node[inner..].copy_from_slice(masses);
        for i in (0..inner).rev() {
            node[i] = node[2 * i + 1] + node[2 * i + 2];
        }
        let f = (0..inner)
            .map(|i| {
                if node[i] > 0.0 {
                    (node[2 * i + 2] / node[i]).clamp(0.0, 1.0)
                } else {
                    0.0
                }
            })
            .collect();
        Self::from_table(n, f)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn is_table(&self) -> bool {
        matches!(self.backing, Backing::Table(_))
    }

    /// The marginal table in heap order, if table-backed.
    pub fn table(&self) -> Option<&[f64]> {
        match &self.backing {
            Backing::Table(t) => Some(t),
            Backing::Generator(_) => None,
        }
    }

    /// Materializes a generator-backed tree.
    pub fn to_table(&self) -> Result<MarginalTree> {
        if self.n > MAX_TABLE_N {
            return Err(Error::Capability {
                what: "tree length n",
                got: self.n,
                limit: MAX_TABLE_N,
            });
        }
        let f = Prefix::all(self.n).map(|w| self.marginal(&w)).collect();
        Self::from_table(self.n, f)
    }

    /// `f(w) = μ(1|w)`. The prefix must be a true prefix.
    pub fn marginal(&self, w: &Prefix) -> f64 {
        debug_assert!(w.len() < self.n);
        match &self.backing {
            Backing::Table(t) => t[w.heap_index()],
            Backing::Generator(g) => {
                let p = g(w);
                debug_assert!((0.0..=1.0).contains(&p), "generator returned {p}");
                p
            }
        }
    }

    /// `μ(b|w)`.
    pub fn edge_probability(&self, w: &Prefix, bit: bool) -> f64 {
        let f = self.marginal(w);
        if bit {
            f
        } else {
            1.0 - f
        }
    }

    /// `μ(x) = ∏ (x_i f(x_{<i}) + (1 − x_i)(1 − f(x_{<i})))`.
    pub fn mass(&self, x: &BitString) -> Result<f64> {
        if x.len() != self.n {
            return domain(format!("element of length {} for a tree with n = {}", x.len(), self.n));
        }
        Ok(self.path_product(x.bits()))
    }

    /// Mass of the cylinder `{w} × {0,1}^{n-|w|}`.
    pub fn conditional_mass(&self, w: &Prefix) -> Result<f64> {
        w.validate(self.n)?;
        Ok(self.path_product(w.bits()))
    }

    /// True when some edge on the path to `w` has probability exactly zero.
    /// Unlike `conditional_mass(w) == 0.0` this does not suffer underflow.
    pub fn is_null_cylinder(&self, w: &Prefix) -> bool {
        let mut node = Prefix::empty();
        for &b in w.bits() {
            if self.edge_probability(&node, b) == 0.0 {
                return true;
            }
            node.push(b);
        }
        false
    }

    fn path_product(&self, bits: &[bool]) -> f64 {
        let mut node = Prefix::empty();
        let mut p = 1.0;
        for &b in bits {
            p *= self.edge_probability(&node, b);
            node.push(b);
        }
        p
    }

    /// All `2^n` masses in index order.
    pub fn masses(&self) -> Result<Vec<f64>> {
        let mut out = Vec::new();
        visit_pair(self, self, |a, _| out.push(a))?;
        Ok(out)
    }

    pub fn to_json(&self) -> Result<String> {
        let table = self.to_table()?;
        let f = Prefix::all(self.n)
            .zip(table.table().expect("table-backed").iter())
            .map(|(w, &p)| (w.to_string(), p))
            .collect();
        Ok(serde_json::to_string(&TreeJson { n: self.n, f })?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let raw: TreeJson = serde_json::from_str(s)?;
        let n = raw.n;
        if n == 0 || n > MAX_TABLE_N {
            return Err(Error::Format(format!("n = {n} outside 1..={MAX_TABLE_N}")));
        }
        let mut f = vec![f64::NAN; (1 << n) - 1];
        for (key, p) in raw.f {
            let w: Prefix = key.parse()?;
            if w.len() >= n {
                return Err(Error::Format(format!("key {key:?} is not a true prefix for n = {n}")));
            }
            f[w.heap_index()] = p;
        }
        if let Some(i) = f.iter().position(|p| p.is_nan()) {
            return Err(Error::Format(format!(
                "missing marginal for prefix {:?}",
                Prefix::from_heap_index(i).to_string()
            )));
        }
        Self::from_table(n, f)
    }
}

/// Wire form: `{"n": int, "f": {prefix-string: float}}`.
#[derive(Serialize, Deserialize)]
struct TreeJson {
    n: usize,
    f: BTreeMap<String, f64>,
}

/// Calls `visit(a(x), b(x))` for every `x` in index order.
pub(crate) fn visit_pair(
    a: &MarginalTree,
    b: &MarginalTree,
    mut visit: impl FnMut(f64, f64),
) -> Result<()> {
    if a.n != b.n {
        return domain(format!("trees over different lengths {} and {}", a.n, b.n));
    }
    if a.n > MAX_TABLE_N {
        return Err(Error::Capability {
            what: "enumeration length n",
            got: a.n,
            limit: MAX_TABLE_N,
        });
    }
    fn walk(
        a: &MarginalTree,
        b: &MarginalTree,
        w: &mut Prefix,
        pa: f64,
        pb: f64,
        visit: &mut dyn FnMut(f64, f64),
    ) {
        if w.len() == a.n {
            visit(pa, pb);
            return;
        }
        let (fa, fb) = (a.marginal(w), b.marginal(w));
        for bit in [false, true] {
            let (ea, eb) = if bit { (fa, fb) } else { (1.0 - fa, 1.0 - fb) };
            let mut child = w.child(bit);
            walk(a, b, &mut child, pa * ea, pb * eb, visit);
        }
    }
    walk(a, b, &mut Prefix::empty(), 1.0, 1.0, &mut visit);
    Ok(())
}
