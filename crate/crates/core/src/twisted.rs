//! Twisted (projective) representations of finite groups: 2-cochains and
//! 2-cocycles with values in Λ^×, twisted group algebras, induction, the
//! signature of a coset action and the twisted transfer (verlagerung).
//!
//! Groups are small (order ≤ a few dozen), so everything is computed from the
//! full multiplication table and all invariants are checked exhaustively.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::arith::{is_prime, lcm};
use crate::coeff::{CoeffElem, PrimeField};
use crate::error::{invalid, Error, Result};

/// Orders up to which [`default_field`] has every root of unity.
pub const ROOT_ORDER_BOUND: u64 = 24;

/// The smallest prime ℓ ≡ 1 mod lcm(1, …, 24): Λ = F_ℓ then contains every
/// root of unity of order at most 24.
pub fn default_field() -> PrimeField {
    let modulus = (1..=ROOT_ORDER_BOUND).fold(1, lcm);
    let ell = (1u64..)
        .map(|k| k * modulus + 1)
        .find(|&l| is_prime(l))
        .expect("Dirichlet: some prime lies in the progression");
    PrimeField::new(ell).expect("prime by construction")
}

// ---------------------------------------------------------------------------
// Groups
// ---------------------------------------------------------------------------

/// A finite group given by its full multiplication table. Equality compares
/// tables only, so a subgroup equal to the whole group equals the group.
#[derive(Clone, Serialize)]
pub struct FiniteGroup {
    name: String,
    order: usize,
    /// `table[a * order + b]` is the index of a·b.
    table: Vec<usize>,
    identity: usize,
    labels: Vec<String>,
    #[serde(skip)]
    inverses: Vec<usize>,
}

impl PartialEq for FiniteGroup {
    fn eq(&self, o: &FiniteGroup) -> bool {
        self.table == o.table && self.identity == o.identity
    }
}

impl Eq for FiniteGroup {}

impl fmt::Debug for FiniteGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FiniteGroup({}, order {})", self.name, self.order)
    }
}

/// JSON input form of a group: either a multiplication table or a list of
/// permutation generators (images of 0..n).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GroupDesc {
    Table {
        name: String,
        table: Vec<Vec<usize>>,
        #[serde(default)]
        labels: Option<Vec<String>>,
    },
    Permutations {
        name: String,
        generators: Vec<Vec<usize>>,
    },
    Cyclic { n: usize },
    Dihedral { n: usize },
    Symmetric { n: usize },
    Quaternion,
}

impl GroupDesc {
    pub fn build(&self) -> Result<FiniteGroup> {
        match self {
            GroupDesc::Table { name, table, labels } => FiniteGroup::from_table(name, table, labels.clone()),
            GroupDesc::Permutations { name, generators } => FiniteGroup::from_permutations(name, generators),
            GroupDesc::Cyclic { n } => FiniteGroup::cyclic(*n),
            GroupDesc::Dihedral { n } => FiniteGroup::dihedral(*n),
            GroupDesc::Symmetric { n } => FiniteGroup::symmetric(*n),
            GroupDesc::Quaternion => Ok(FiniteGroup::quaternion()),
        }
    }
}

impl FiniteGroup {
    /// Builds a group from a square table, verifying closure, associativity,
    /// the identity and inverses.
    pub fn from_table(name: &str, table: &[Vec<usize>], labels: Option<Vec<String>>) -> Result<FiniteGroup> {
        let n = table.len();
        if n == 0 {
            return invalid("group table is empty");
        }
        if let Some(row) = table.iter().position(|r| r.len() != n) {
            return invalid(format!("group table row {row} has the wrong length"));
        }
        if table.iter().flatten().any(|&x| x >= n) {
            return invalid("group table entry out of range");
        }
        let labels = match labels {
            Some(l) if l.len() != n => return invalid("group labels: wrong count"),
            Some(l) => l,
            None => (0..n).map(|i| format!("g{i}")).collect(),
        };
        let flat: Vec<usize> = table.iter().flatten().copied().collect();
        let identity = (0..n)
            .find(|&e| (0..n).all(|x| flat[e * n + x] == x && flat[x * n + e] == x))
            .ok_or_else(|| Error::InvalidInput("group table has no identity".into()))?;
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    if flat[flat[a * n + b] * n + c] != flat[a * n + flat[b * n + c]] {
                        return invalid(format!("group table is not associative at ({a}, {b}, {c})"));
                    }
                }
            }
        }
        let mut inverses = Vec::with_capacity(n);
        for a in 0..n {
            let inv = (0..n)
                .find(|&b| flat[a * n + b] == identity)
                .ok_or_else(|| Error::InvalidInput(format!("element {a} has no inverse")))?;
            inverses.push(inv);
        }
        Ok(FiniteGroup { name: name.to_string(), order: n, table: flat, identity, labels, inverses })
    }

    /// The group generated by permutations of {0, …, m−1}, composed as
    /// (στ)(i) = σ(τ(i)). Elements are indexed in lexicographic order of
    /// their image lists, so the identity has index 0.
    pub fn from_permutations(name: &str, generators: &[Vec<usize>]) -> Result<FiniteGroup> {
        let m = generators.first().map_or(0, Vec::len);
        for g in generators {
            let mut seen = vec![false; m];
            if g.len() != m || g.iter().any(|&i| i >= m || std::mem::replace(&mut seen[i], true)) {
                return invalid(format!("{g:?} is not a permutation of 0..{m}"));
            }
        }
        let compose = |s: &[usize], t: &[usize]| -> Vec<usize> { t.iter().map(|&i| s[i]).collect() };
        let identity: Vec<usize> = (0..m).collect();
        let mut elems = BTreeSet::from([identity.clone()]);
        let mut queue = VecDeque::from([identity]);
        while let Some(x) = queue.pop_front() {
            for g in generators {
                let y = compose(g, &x);
                if elems.insert(y.clone()) {
                    queue.push_back(y);
                }
            }
        }
        let elems: Vec<Vec<usize>> = elems.into_iter().collect();
        let table: Vec<Vec<usize>> = elems
            .iter()
            .map(|a| {
                elems
                    .iter()
                    .map(|b| elems.binary_search(&compose(a, b)).expect("closed under composition"))
                    .collect()
            })
            .collect();
        let labels = elems.iter().map(|p| format!("{p:?}")).collect();
        FiniteGroup::from_table(name, &table, Some(labels))
    }

    /// Z/n with k ↦ r^k.
    pub fn cyclic(n: usize) -> Result<FiniteGroup> {
        if n == 0 {
            return invalid("cyclic group of order 0");
        }
        let table: Vec<Vec<usize>> = (0..n).map(|a| (0..n).map(|b| (a + b) % n).collect()).collect();
        let labels = (0..n).map(|k| format!("r^{k}")).collect();
        FiniteGroup::from_table(&format!("C{n}"), &table, Some(labels))
    }

    /// The dihedral group of order 2n; index k + n·ε stands for r^k s^ε with
    /// s r s = r^{−1}.
    pub fn dihedral(n: usize) -> Result<FiniteGroup> {
        if n == 0 {
            return invalid("dihedral group D0");
        }
        let mul = |x: usize, y: usize| {
            let (a, e) = (x % n, x / n);
            let (b, f) = (y % n, y / n);
            let k = (if e == 0 { a + b } else { a + n - b }) % n;
            k + n * ((e + f) % 2)
        };
        let table: Vec<Vec<usize>> = (0..2 * n).map(|x| (0..2 * n).map(|y| mul(x, y)).collect()).collect();
        let labels = (0..2 * n).map(|x| format!("r^{}s^{}", x % n, x / n)).collect();
        FiniteGroup::from_table(&format!("D{n}"), &table, Some(labels))
    }

    /// The symmetric group on n letters, generated by (0 1) and (0 1 … n−1).
    pub fn symmetric(n: usize) -> Result<FiniteGroup> {
        if n == 0 {
            return invalid("symmetric group on 0 letters");
        }
        let mut transposition: Vec<usize> = (0..n).collect();
        if n > 1 {
            transposition.swap(0, 1);
        }
        let cycle: Vec<usize> = (0..n).map(|i| (i + 1) % n).collect();
        FiniteGroup::from_permutations(&format!("S{n}"), &[transposition, cycle])
    }

    /// The quaternion group; index u + 4·s stands for (−1)^s·u with
    /// u ∈ (1, i, j, k).
    pub fn quaternion() -> FiniteGroup {
        // unit products: (sign, unit) of u·v for u, v ∈ {1, i, j, k}.
        const UNIT: [[(usize, usize); 4]; 4] = [
            [(0, 0), (0, 1), (0, 2), (0, 3)],
            [(0, 1), (1, 0), (0, 3), (1, 2)],
            [(0, 2), (1, 3), (1, 0), (0, 1)],
            [(0, 3), (0, 2), (1, 1), (1, 0)],
        ];
        let mul = |x: usize, y: usize| {
            let (s, u) = UNIT[x % 4][y % 4];
            u + 4 * ((s + x / 4 + y / 4) % 2)
        };
        let table: Vec<Vec<usize>> = (0..8).map(|x| (0..8).map(|y| mul(x, y)).collect()).collect();
        let names = ["1", "i", "j", "k"];
        let labels = (0..8).map(|x| format!("{}{}", if x < 4 { "" } else { "-" }, names[x % 4])).collect();
        FiniteGroup::from_table("Q8", &table, Some(labels)).expect("Q8 table is a group")
    }

    /// The bundled families of order ≤ 24: cyclic C1…C24, dihedral D2…D12,
    /// S3, S4 and Q8.
    pub fn small_groups() -> Vec<FiniteGroup> {
        let mut out: Vec<FiniteGroup> = (1..=24).map(|n| FiniteGroup::cyclic(n).expect("n ≥ 1")).collect();
        out.extend((2..=12).map(|n| FiniteGroup::dihedral(n).expect("n ≥ 1")));
        out.push(FiniteGroup::symmetric(3).expect("n ≥ 1"));
        out.push(FiniteGroup::symmetric(4).expect("n ≥ 1"));
        out.push(FiniteGroup::quaternion());
        out
    }

    pub fn name(&self) -> &str {
        &self.name
    }
    pub fn order(&self) -> usize {
        self.order
    }
    pub fn identity(&self) -> usize {
        self.identity
    }
    pub fn label(&self, x: usize) -> &str {
        &self.labels[x]
    }
    pub fn mul(&self, a: usize, b: usize) -> usize {
        self.table[a * self.order + b]
    }
    pub fn inv(&self, a: usize) -> usize {
        self.inverses[a]
    }
    pub fn pow(&self, a: usize, k: usize) -> usize {
        (0..k).fold(self.identity, |acc, _| self.mul(acc, a))
    }

    /// The subgroup generated by `gens`, as a sorted list of indices.
    pub fn generated(&self, gens: &[usize]) -> Vec<usize> {
        let mut elems = BTreeSet::from([self.identity]);
        let mut queue = VecDeque::from([self.identity]);
        while let Some(x) = queue.pop_front() {
            for &g in gens {
                let y = self.mul(x, g);
                if elems.insert(y) {
                    queue.push_back(y);
                }
            }
        }
        elems.into_iter().collect()
    }

    /// Every subgroup, as sorted index lists ordered by (size, elements).
    pub fn subgroups(&self) -> Vec<Vec<usize>> {
        let mut found = BTreeSet::from([(1usize, vec![self.identity])]);
        let mut queue = VecDeque::from([vec![self.identity]]);
        while let Some(s) = queue.pop_front() {
            for g in 0..self.order {
                if s.binary_search(&g).is_err() {
                    let mut gens = s.clone();
                    gens.push(g);
                    let t = self.generated(&gens);
                    if found.insert((t.len(), t.clone())) {
                        queue.push_back(t);
                    }
                }
            }
        }
        found.into_iter().map(|(_, s)| s).collect()
    }

    /// `elems` as a subgroup in its own right.
    pub fn subgroup(&self, elems: &[usize]) -> Result<Subgroup> {
        let mut embed: Vec<usize> = elems.to_vec();
        embed.sort_unstable();
        embed.dedup();
        if embed.iter().any(|&x| x >= self.order) {
            return invalid("subgroup element out of range");
        }
        let pos = |x: usize| embed.binary_search(&x).ok();
        let mut table = Vec::with_capacity(embed.len());
        for &a in &embed {
            let mut row = Vec::with_capacity(embed.len());
            for &b in &embed {
                row.push(pos(self.mul(a, b)).ok_or_else(|| Error::InvalidInput("not a subgroup: not closed".into()))?);
            }
            table.push(row);
        }
        if pos(self.identity).is_none() {
            return invalid("not a subgroup: identity missing");
        }
        let labels = embed.iter().map(|&x| self.labels[x].clone()).collect();
        let group = FiniteGroup::from_table(&format!("{}<{}>", self.name, embed.len()), &table, Some(labels))?;
        Ok(Subgroup { group, embed })
    }
}

/// A subgroup H ≤ G: H as a group plus its embedding into G's indices
/// (increasing, so H inherits G's element order).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Subgroup {
    pub group: FiniteGroup,
    pub embed: Vec<usize>,
}

impl Subgroup {
    /// G as a subgroup of itself.
    pub fn whole(g: &FiniteGroup) -> Subgroup {
        g.subgroup(&(0..g.order()).collect::<Vec<_>>()).expect("G ≤ G")
    }

    pub fn index_in(&self, g: &FiniteGroup) -> usize {
        g.order() / self.group.order()
    }

    /// K ≤ H ≤ G with both given inside G: K as a subgroup of H.
    pub fn inside(&self, parent: &Subgroup) -> Result<Subgroup> {
        let idx: Option<Vec<usize>> = self.embed.iter().map(|x| parent.embed.binary_search(x).ok()).collect();
        let idx = idx.ok_or_else(|| Error::InvalidInput("not contained in the parent subgroup".into()))?;
        parent.group.subgroup(&idx)
    }

    /// Composes the embeddings of K ≤ H (inside H) and H ≤ G.
    pub fn compose(&self, outer: &Subgroup, g: &FiniteGroup) -> Result<Subgroup> {
        let elems: Vec<usize> = self.embed.iter().map(|&x| outer.embed[x]).collect();
        g.subgroup(&elems)
    }
}

/// How coset representatives of G/H are chosen.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CosetRule {
    /// Each coset is represented by its smallest index; cosets are listed by
    /// representative.
    SmallestIndex,
    /// Representatives and coset order drawn from a ChaCha8 stream.
    Shuffled(u64),
}

/// Left cosets gH: representatives t_c and the coset containing each element.
#[derive(Clone, Debug)]
struct Cosets {
    reps: Vec<usize>,
    coset_of: Vec<usize>,
}

impl Cosets {
    fn new(g: &FiniteGroup, h: &Subgroup, rule: CosetRule) -> Cosets {
        let mut order: Vec<usize> = (0..g.order()).collect();
        if let CosetRule::Shuffled(seed) = rule {
            order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        }
        let mut coset_of = vec![usize::MAX; g.order()];
        let mut reps = Vec::new();
        for x in order {
            if coset_of[x] == usize::MAX {
                for &y in &h.embed {
                    coset_of[g.mul(x, y)] = reps.len();
                }
                reps.push(x);
            }
        }
        Cosets { reps, coset_of }
    }

    /// For k ∈ G and a coset c: the coset c' with k·t_c = t_{c'}·h, and h
    /// (as an index of H).
    fn act(&self, g: &FiniteGroup, h: &Subgroup, k: usize, c: usize) -> (usize, usize) {
        let x = g.mul(k, self.reps[c]);
        let c2 = self.coset_of[x];
        let inside = g.mul(g.inv(self.reps[c2]), x);
        let hi = h.embed.binary_search(&inside).expect("t_{c'}^{-1} k t_c lies in H");
        (c2, hi)
    }
}

// ---------------------------------------------------------------------------
// Matrices over Λ
// ---------------------------------------------------------------------------

/// A square matrix over Λ, row-major.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Matrix {
    n: usize,
    data: Vec<CoeffElem>,
}

impl Matrix {
    pub fn zero(lam: PrimeField, n: usize) -> Matrix {
        Matrix { n, data: vec![lam.zero(); n * n] }
    }
    pub fn identity(lam: PrimeField, n: usize) -> Matrix {
        Matrix::scalar(lam, n, lam.one())
    }
    pub fn scalar(lam: PrimeField, n: usize, c: CoeffElem) -> Matrix {
        let mut m = Matrix::zero(lam, n);
        for i in 0..n {
            m.data[i * n + i] = c;
        }
        m
    }
    pub fn from_rows(rows: Vec<Vec<CoeffElem>>) -> Result<Matrix> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return invalid("matrix is not square");
        }
        Ok(Matrix { n, data: rows.into_iter().flatten().collect() })
    }
    pub fn size(&self) -> usize {
        self.n
    }
    pub fn get(&self, i: usize, j: usize) -> CoeffElem {
        self.data[i * self.n + j]
    }
    fn set(&mut self, i: usize, j: usize, v: CoeffElem) {
        self.data[i * self.n + j] = v;
    }
    pub fn mul(&self, o: &Matrix) -> Matrix {
        let n = self.n;
        let mut out = Matrix { n, data: vec![self.data[0].zero_like(); n * n] };
        for i in 0..n {
            for k in 0..n {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * o.get(k, j);
                }
            }
        }
        out
    }
    pub fn scale(&self, c: CoeffElem) -> Matrix {
        Matrix { n: self.n, data: self.data.iter().map(|&x| x * c).collect() }
    }
    pub fn trace(&self) -> CoeffElem {
        (1..self.n).fold(self.get(0, 0), |acc, i| acc + self.get(i, i))
    }
    /// Determinant by Gaussian elimination.
    pub fn det(&self) -> CoeffElem {
        let n = self.n;
        let mut a = self.data.clone();
        let mut det = a[0].one_like();
        for col in 0..n {
            let Some(piv) = (col..n).find(|&r| !a[r * n + col].is_zero()) else {
                return det.zero_like();
            };
            if piv != col {
                for j in 0..n {
                    a.swap(piv * n + j, col * n + j);
                }
                det = -det;
            }
            let p = a[col * n + col];
            det *= p;
            let pinv = p.inv();
            for r in col + 1..n {
                let f = a[r * n + col] * pinv;
                if f.is_zero() {
                    continue;
                }
                for j in col..n {
                    let v = a[col * n + j];
                    a[r * n + j] = a[r * n + j] - f * v;
                }
            }
        }
        det
    }
    /// Entries as integers mod ℓ.
    pub fn values(&self) -> Vec<Vec<u64>> {
        (0..self.n).map(|i| (0..self.n).map(|j| self.get(i, j).value()).collect()).collect()
    }
}

// ---------------------------------------------------------------------------
// Multipliers
// ---------------------------------------------------------------------------

/// A Λ^×-valued 2-cochain on a finite group. Values are units of the finite
/// field Λ, hence roots of unity. [`Multiplier::new`] additionally enforces
/// normalization and the cocycle relation; [`Multiplier::cochain`] does not,
/// so that non-cocycles can be studied.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Multiplier {
    group: FiniteGroup,
    lam: PrimeField,
    table: Vec<CoeffElem>,
}

impl Multiplier {
    /// A validated multiplier: unit values, μ(1, 1) = 1 and the cocycle
    /// relation μ(x,y)μ(xy,z) = μ(x,yz)μ(y,z).
    pub fn new(group: &FiniteGroup, lam: PrimeField, table: Vec<CoeffElem>) -> Result<Multiplier> {
        let mu = Multiplier::cochain(group, lam, table)?;
        let e = group.identity();
        if !mu.value(e, e).is_one() {
            return invalid("multiplier: μ(1, 1) ≠ 1");
        }
        if let Some((x, y, z)) = mu.cocycle_failure() {
            return invalid(format!("multiplier: cocycle relation fails at ({x}, {y}, {z})"));
        }
        Ok(mu)
    }

    /// Any table of units, without further checks.
    pub fn cochain(group: &FiniteGroup, lam: PrimeField, table: Vec<CoeffElem>) -> Result<Multiplier> {
        let n = group.order();
        if table.len() != n * n {
            return invalid(format!("multiplier table needs {} entries, got {}", n * n, table.len()));
        }
        if table.iter().any(|v| v.ell() != lam.ell()) {
            return invalid("multiplier values live in a different Λ");
        }
        if table.iter().any(|v| v.is_zero()) {
            return invalid("multiplier values must be units");
        }
        Ok(Multiplier { group: group.clone(), lam, table })
    }

    pub fn trivial(group: &FiniteGroup, lam: PrimeField) -> Multiplier {
        let n = group.order();
        Multiplier { group: group.clone(), lam, table: vec![lam.one(); n * n] }
    }

    /// The pullback φ*μ along a homomorphism φ: G → target (given as the
    /// image of every element).
    pub fn pullback(group: &FiniteGroup, phi: &[usize], mu: &Multiplier) -> Result<Multiplier> {
        let t = &mu.group;
        if phi.len() != group.order() || phi.iter().any(|&y| y >= t.order()) {
            return invalid("pullback: map has the wrong shape");
        }
        for a in 0..group.order() {
            for b in 0..group.order() {
                if phi[group.mul(a, b)] != t.mul(phi[a], phi[b]) {
                    return invalid("pullback: map is not a homomorphism");
                }
            }
        }
        let n = group.order();
        let table = (0..n * n).map(|i| mu.value(phi[i / n], phi[i % n])).collect();
        Multiplier::new(group, mu.lam, table)
    }

    pub fn group(&self) -> &FiniteGroup {
        &self.group
    }
    pub fn field(&self) -> PrimeField {
        self.lam
    }
    pub fn value(&self, x: usize, y: usize) -> CoeffElem {
        self.table[x * self.group.order() + y]
    }
    pub fn is_trivial(&self) -> bool {
        self.table.iter().all(|v| v.is_one())
    }

    /// The first (x, y, z) where d²μ ≠ 1.
    fn cocycle_failure(&self) -> Option<(usize, usize, usize)> {
        let g = &self.group;
        let n = g.order();
        for x in 0..n {
            for y in 0..n {
                let xy = g.mul(x, y);
                for z in 0..n {
                    let lhs = self.value(x, y) * self.value(xy, z);
                    let rhs = self.value(x, g.mul(y, z)) * self.value(y, z);
                    if lhs != rhs {
                        return Some((x, y, z));
                    }
                }
            }
        }
        None
    }

    pub fn is_cocycle(&self) -> bool {
        self.cocycle_failure().is_none()
    }

    /// μ(x,y)μ(xy,z)μ(x,yz)^{−1}μ(y,z)^{−1}, indexed by (x·n + y)·n + z.
    pub fn d2(&self) -> Vec<CoeffElem> {
        let g = &self.group;
        let n = g.order();
        let mut out = Vec::with_capacity(n * n * n);
        for x in 0..n {
            for y in 0..n {
                for z in 0..n {
                    let num = self.value(x, y) * self.value(g.mul(x, y), z);
                    let den = self.value(x, g.mul(y, z)) * self.value(y, z);
                    out.push(num / den);
                }
            }
        }
        out
    }

    /// μ restricted to H × H.
    pub fn restrict(&self, h: &Subgroup) -> Multiplier {
        let table = h
            .embed
            .iter()
            .flat_map(|&a| h.embed.iter().map(move |&b| (a, b)))
            .map(|(a, b)| self.value(a, b))
            .collect();
        Multiplier { group: h.group.clone(), lam: self.lam, table }
    }

    /// Pointwise product.
    pub fn mul(&self, o: &Multiplier) -> Result<Multiplier> {
        if self.group != o.group || self.lam != o.lam {
            return invalid("multipliers on different groups or fields");
        }
        let table = self.table.iter().zip(&o.table).map(|(&a, &b)| a * b).collect();
        Ok(Multiplier { group: self.group.clone(), lam: self.lam, table })
    }

    /// Pointwise power μ^k.
    pub fn pow(&self, k: i64) -> Multiplier {
        let table = self.table.iter().map(|v| v.pow(k)).collect();
        Multiplier { group: self.group.clone(), lam: self.lam, table }
    }

    /// The table as integers mod ℓ.
    pub fn values(&self) -> Vec<u64> {
        self.table.iter().map(|v| v.value()).collect()
    }
}

/// d¹λ(x, y) = λ(x)λ(y)λ(xy)^{−1}; requires λ(1) = 1 and unit values.
pub fn d1(group: &FiniteGroup, lam: PrimeField, lambda: &[CoeffElem]) -> Result<Multiplier> {
    let n = group.order();
    if lambda.len() != n {
        return invalid(format!("d1: λ needs {n} values, got {}", lambda.len()));
    }
    if !lambda[group.identity()].is_one() {
        return invalid("d1: λ(1) ≠ 1");
    }
    if lambda.iter().any(|v| v.is_zero() || v.ell() != lam.ell()) {
        return invalid("d1: λ must take unit values in Λ");
    }
    let table = (0..n * n)
        .map(|i| {
            let (x, y) = (i / n, i % n);
            lambda[x] * lambda[y] / lambda[group.mul(x, y)]
        })
        .collect();
    Multiplier::new(group, lam, table)
}

/// d²μ, indexed by (x·n + y)·n + z.
pub fn d2(mu: &Multiplier) -> Vec<CoeffElem> {
    mu.d2()
}

pub fn is_cocycle(mu: &Multiplier) -> bool {
    mu.is_cocycle()
}

/// Product in the twisted group algebra Λ[G, μ], [x][y] = μ(x,y)[xy], of two
/// formal combinations given by their coefficient vectors.
pub fn twisted_algebra_mul(mu: &Multiplier, a: &[CoeffElem], b: &[CoeffElem]) -> Result<Vec<CoeffElem>> {
    let g = &mu.group;
    let n = g.order();
    if a.len() != n || b.len() != n {
        return invalid("twisted algebra: combinations must have one coefficient per element");
    }
    let mut out = vec![mu.lam.zero(); n];
    for (x, &ax) in a.iter().enumerate() {
        if ax.is_zero() {
            continue;
        }
        for (y, &by) in b.iter().enumerate() {
            if !by.is_zero() {
                out[g.mul(x, y)] += ax * by * mu.value(x, y);
            }
        }
    }
    Ok(out)
}

/// Whether ([x][y])[z] = [x]([y][z]) for every basis triple, evaluated with
/// [`twisted_algebra_mul`].
pub fn is_associative(mu: &Multiplier) -> bool {
    let n = mu.group.order();
    let basis: Vec<Vec<CoeffElem>> = (0..n)
        .map(|x| (0..n).map(|i| if i == x { mu.lam.one() } else { mu.lam.zero() }).collect())
        .collect();
    let prod = |a: &[CoeffElem], b: &[CoeffElem]| twisted_algebra_mul(mu, a, b).expect("shapes match");
    (0..n).all(|x| {
        (0..n).all(|y| {
            let xy = prod(&basis[x], &basis[y]);
            (0..n).all(|z| prod(&xy, &basis[z]) == prod(&basis[x], &prod(&basis[y], &basis[z])))
        })
    })
}

// ---------------------------------------------------------------------------
// Twisted representations
// ---------------------------------------------------------------------------

/// A representation of (G, μ): matrices with ρ(g)ρ(h) = μ(g,h)ρ(gh) and
/// ρ(1) = 1.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct TwistedRep {
    multiplier: Multiplier,
    rank: usize,
    mats: Vec<Matrix>,
}

impl TwistedRep {
    /// Validates the representation identity on all pairs.
    pub fn new(multiplier: &Multiplier, mats: Vec<Matrix>) -> Result<TwistedRep> {
        let g = multiplier.group();
        if mats.len() != g.order() {
            return invalid(format!("representation needs {} matrices, got {}", g.order(), mats.len()));
        }
        let rank = mats[0].size();
        if mats.iter().any(|m| m.size() != rank) {
            return invalid("representation matrices of different sizes");
        }
        let rep = TwistedRep::from_parts(multiplier, mats);
        rep.validate()?;
        Ok(rep)
    }

    /// Used by constructions that are representations by design (induction,
    /// restriction); [`TwistedRep::validate`] re-checks them in tests.
    fn from_parts(multiplier: &Multiplier, mats: Vec<Matrix>) -> TwistedRep {
        TwistedRep { multiplier: multiplier.clone(), rank: mats[0].size(), mats }
    }

    /// Checks ρ(1) = 1 and ρ(g)ρ(h) = μ(g,h)ρ(gh) for all pairs.
    pub fn validate(&self) -> Result<()> {
        let g = self.multiplier.group();
        let lam = self.multiplier.field();
        if self.mats[g.identity()] != Matrix::identity(lam, self.rank) {
            return invalid("representation: ρ(1) is not the identity");
        }
        for a in 0..g.order() {
            for b in 0..g.order() {
                if self.mats[a].mul(&self.mats[b]) != self.mats[g.mul(a, b)].scale(self.multiplier.value(a, b)) {
                    return invalid(format!("representation identity fails at ({a}, {b})"));
                }
            }
        }
        Ok(())
    }

    /// A rank-1 representation given by its values.
    pub fn scalar(multiplier: &Multiplier, values: &[CoeffElem]) -> Result<TwistedRep> {
        let lam = multiplier.field();
        TwistedRep::new(multiplier, values.iter().map(|&v| Matrix::scalar(lam, 1, v)).collect())
    }

    /// The twisted regular representation: left multiplication on Λ[G, μ],
    /// [g]·[x] = μ(g,x)[gx].
    pub fn regular(multiplier: &Multiplier) -> Result<TwistedRep> {
        let g = multiplier.group();
        let n = g.order();
        let lam = multiplier.field();
        let mats = (0..n)
            .map(|a| {
                let mut m = Matrix::zero(lam, n);
                for x in 0..n {
                    m.set(g.mul(a, x), x, multiplier.value(a, x));
                }
                m
            })
            .collect();
        TwistedRep::new(multiplier, mats)
    }

    pub fn multiplier(&self) -> &Multiplier {
        &self.multiplier
    }
    pub fn group(&self) -> &FiniteGroup {
        self.multiplier.group()
    }
    pub fn rank(&self) -> usize {
        self.rank
    }
    pub fn matrix(&self, g: usize) -> &Matrix {
        &self.mats[g]
    }
    pub fn traces(&self) -> Vec<CoeffElem> {
        self.mats.iter().map(Matrix::trace).collect()
    }
    pub fn dets(&self) -> Vec<CoeffElem> {
        self.mats.iter().map(Matrix::det).collect()
    }

    /// The values ρ(g) of a rank-1 representation.
    pub fn scalar_values(&self) -> Result<Vec<CoeffElem>> {
        if self.rank != 1 {
            return invalid("scalar values of a representation of rank > 1");
        }
        Ok(self.mats.iter().map(|m| m.get(0, 0)).collect())
    }

    /// det ρ, a rank-1 representation of (G, μ^rank).
    pub fn det(&self) -> Result<TwistedRep> {
        TwistedRep::scalar(&self.multiplier.pow(self.rank as i64), &self.dets())
    }

    /// Restriction to a subgroup.
    pub fn restrict(&self, h: &Subgroup) -> Result<TwistedRep> {
        if h.embed.last().is_some_and(|&x| x >= self.mats.len()) {
            return invalid("restriction to a subgroup of another group");
        }
        let mats = h.embed.iter().map(|&x| self.mats[x].clone()).collect();
        Ok(TwistedRep::from_parts(&self.multiplier.restrict(h), mats))
    }

    /// ρ ⊗ χ for a rank-1 representation χ; the multipliers multiply.
    pub fn twist(&self, chi: &TwistedRep) -> Result<TwistedRep> {
        let values = chi.scalar_values()?;
        let mu = self.multiplier.mul(&chi.multiplier)?;
        let mats = self.mats.iter().zip(values).map(|(m, v)| m.scale(v)).collect();
        TwistedRep::new(&mu, mats)
    }

    /// ρ ∘ φ for a homomorphism φ: G → (group of ρ); a representation of
    /// (G, φ*μ).
    pub fn pullback(&self, group: &FiniteGroup, phi: &[usize]) -> Result<TwistedRep> {
        let mu = Multiplier::pullback(group, phi, &self.multiplier)?;
        TwistedRep::new(&mu, phi.iter().map(|&y| self.mats[y].clone()).collect())
    }
}

/// The rank-1 representation of (H, μ|H) given by g ↦ λ(g), when μ = d¹λ.
pub fn coboundary_character(mu: &Multiplier, lambda: &[CoeffElem], h: &Subgroup) -> Result<TwistedRep> {
    let values: Vec<CoeffElem> = h.embed.iter().map(|&x| lambda[x]).collect();
    TwistedRep::scalar(&mu.restrict(h), &values)
}

fn check_restriction(mu: &Multiplier, h: &Subgroup, v: &TwistedRep) -> Result<()> {
    if *v.multiplier() != mu.restrict(h) {
        return invalid("the representation's multiplier is not the restriction of μ");
    }
    Ok(())
}

/// Ind_H^G V = Λ[G, μ] ⊗_{Λ[H, μ|H]} V with smallest-index coset
/// representatives.
pub fn induce(mu: &Multiplier, h: &Subgroup, v: &TwistedRep) -> Result<TwistedRep> {
    induce_with(mu, h, v, CosetRule::SmallestIndex)
}

/// Ind_H^G V = ⊕_c [t_c]V. Writing k·t_c = t_{c'}·h, the block (c', c) of k is
/// μ(k, t_c) μ(t_{c'}, h)^{−1} ρ(h).
pub fn induce_with(mu: &Multiplier, h: &Subgroup, v: &TwistedRep, rule: CosetRule) -> Result<TwistedRep> {
    check_restriction(mu, h, v)?;
    let g = mu.group();
    let cosets = Cosets::new(g, h, rule);
    let r = v.rank();
    let size = r * cosets.reps.len();
    let lam = mu.field();
    let mut mats = Vec::with_capacity(g.order());
    for k in 0..g.order() {
        let mut m = Matrix::zero(lam, size);
        for (c, &t) in cosets.reps.iter().enumerate() {
            let (c2, hi) = cosets.act(g, h, k, c);
            let coef = mu.value(k, t) / mu.value(cosets.reps[c2], h.embed[hi]);
            let block = v.matrix(hi);
            for i in 0..r {
                for j in 0..r {
                    m.set(c2 * r + i, c * r + j, coef * block.get(i, j));
                }
            }
        }
        mats.push(m);
    }
    Ok(TwistedRep::from_parts(mu, mats))
}

/// δ_{G/H}(g): the signature of g acting on G/H by left translation.
pub fn delta_char(g: &FiniteGroup, h: &Subgroup) -> Vec<i64> {
    let cosets = Cosets::new(g, h, CosetRule::SmallestIndex);
    let m = cosets.reps.len();
    (0..g.order())
        .map(|k| {
            let perm: Vec<usize> = (0..m).map(|c| cosets.act(g, h, k, c).0).collect();
            let mut seen = vec![false; m];
            let mut sign = 1;
            for s in 0..m {
                let mut len = 0;
                let mut c = s;
                while !seen[c] {
                    seen[c] = true;
                    c = perm[c];
                    len += 1;
                }
                if len > 0 && len % 2 == 0 {
                    sign = -sign;
                }
            }
            sign
        })
        .collect()
}

/// Ver(V)(g) = ∏_i μ(g,t_i)^{r} μ(t_{σ(i)}, h_{g,i})^{−r} det ρ(h_{g,i}),
/// where g·t_i = t_{σ(i)}·h_{g,i} and r = rk V, with smallest-index
/// representatives.
pub fn verlagerung(mu: &Multiplier, h: &Subgroup, v: &TwistedRep) -> Result<Vec<CoeffElem>> {
    verlagerung_with(mu, h, v, CosetRule::SmallestIndex)
}

pub fn verlagerung_with(mu: &Multiplier, h: &Subgroup, v: &TwistedRep, rule: CosetRule) -> Result<Vec<CoeffElem>> {
    check_restriction(mu, h, v)?;
    let g = mu.group();
    let cosets = Cosets::new(g, h, rule);
    let r = v.rank() as i64;
    let dets = v.dets();
    Ok((0..g.order())
        .map(|k| {
            cosets.reps.iter().enumerate().fold(mu.field().one(), |acc, (c, &t)| {
                let (c2, hi) = cosets.act(g, h, k, c);
                let factor = (mu.value(k, t) / mu.value(cosets.reps[c2], h.embed[hi])).pow(r);
                acc * factor * dets[hi]
            })
        })
        .collect())
}

/// δ^{−rk V}·det(Ind_H^G V), the defining form of the transfer.
pub fn verlagerung_via_induction(mu: &Multiplier, h: &Subgroup, v: &TwistedRep) -> Result<Vec<CoeffElem>> {
    let ind = induce(mu, h, v)?;
    let delta = delta_char(mu.group(), h);
    let r = v.rank() as i64;
    let lam = mu.field();
    Ok(ind.dets().into_iter().zip(delta).map(|(d, s)| d * lam.elem(s).pow(-r)).collect())
}

/// Ver(V) as a rank-1 representation of (G, μ^{rk V·[G:H]}).
pub fn verlagerung_rep(mu: &Multiplier, h: &Subgroup, v: &TwistedRep) -> Result<TwistedRep> {
    let values = verlagerung(mu, h, v)?;
    let k = (v.rank() * h.index_in(mu.group())) as i64;
    TwistedRep::scalar(&mu.pow(k), &values)
}

// ---------------------------------------------------------------------------
// Identity checks on chains
// ---------------------------------------------------------------------------

/// A chain K ≤ H ≤ G (K and H given inside G).
#[derive(Clone, Debug)]
pub struct Chain {
    pub g: FiniteGroup,
    pub h: Subgroup,
    pub k: Subgroup,
}

impl Chain {
    pub fn new(g: &FiniteGroup, h: &[usize], k: &[usize]) -> Result<Chain> {
        let hs = g.subgroup(h)?;
        let ks = g.subgroup(k)?;
        ks.inside(&hs)?;
        Ok(Chain { g: g.clone(), h: hs, k: ks })
    }
}

/// Outcome of [`check_ver_identities`]; every flag must hold.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct VerReport {
    pub group: String,
    pub order: usize,
    pub h_order: usize,
    pub k_order: usize,
    pub ell: u64,
    pub representations: usize,
    /// Explicit formula = δ^{−rk}·det∘Ind for K→H, H→G and K→G.
    pub explicit_matches_induced: bool,
    /// Ver(V) = Ver(det V).
    pub det_reduction: bool,
    /// Ver_{K→G} = Ver_{H→G} ∘ Ver_{K→H}.
    pub composition: bool,
    /// Ver(χ₁χ₂) = Ver(χ₁)Ver(χ₂) on rank-1 pairs.
    pub multiplicativity: bool,
    /// δ_{G/K} = δ_{G/H}^{[H:K]}·Ver_{H→G}(δ_{H/K}).
    pub delta_composition: bool,
    /// Ind_H^G Ind_K^H V and Ind_K^G V have equal traces and determinants.
    pub induction_transitivity: bool,
    /// Ver unchanged under shuffled coset representatives.
    pub representative_independence: bool,
    pub pass: bool,
}

/// Checks every transfer identity on the chain for each representation of
/// (K, μ|K) in `reps`.
pub fn check_ver_identities(mu: &Multiplier, chain: &Chain, reps: &[TwistedRep], seed: u64) -> Result<VerReport> {
    let g = &chain.g;
    if mu.group() != g {
        return invalid("multiplier is on a different group than the chain");
    }
    let lam = mu.field();
    let k_in_h = chain.k.inside(&chain.h)?;
    let mu_h = mu.restrict(&chain.h);
    let mut explicit = true;
    let mut det_reduction = true;
    let mut composition = true;
    let mut transitivity = true;
    let mut independence = true;
    for (i, v) in reps.iter().enumerate() {
        check_restriction(mu, &chain.k, v)?;
        let r = v.rank() as i64;
        // K → H
        let ver_kh = verlagerung(&mu_h, &k_in_h, v)?;
        explicit &= ver_kh == verlagerung_via_induction(&mu_h, &k_in_h, v)?;
        // K → G
        let ver_kg = verlagerung(mu, &chain.k, v)?;
        explicit &= ver_kg == verlagerung_via_induction(mu, &chain.k, v)?;
        let shuffled = CosetRule::Shuffled(seed.wrapping_add(i as u64));
        independence &= ver_kg == verlagerung_with(mu, &chain.k, v, shuffled)?;
        det_reduction &= ver_kg == verlagerung(&mu.pow(r), &chain.k, &v.det()?)?;
        // H → G on W = Ind_K^H V, a representation of higher rank.
        let w = induce(&mu_h, &k_in_h, v)?;
        let rw = w.rank() as i64;
        let ver_hg = verlagerung(mu, &chain.h, &w)?;
        explicit &= ver_hg == verlagerung_via_induction(mu, &chain.h, &w)?;
        det_reduction &= ver_hg == verlagerung(&mu.pow(rw), &chain.h, &w.det()?)?;
        independence &= ver_hg == verlagerung_with(mu, &chain.h, &w, shuffled)?;
        // composition through H
        let ver_kh_rep = TwistedRep::scalar(&mu_h.pow(r * k_in_h.index_in(&chain.h.group) as i64), &ver_kh)?;
        let mu_k_h = mu.pow(r * k_in_h.index_in(&chain.h.group) as i64);
        composition &= ver_kg == verlagerung(&mu_k_h, &chain.h, &ver_kh_rep)?;
        // transitivity of induction
        let direct = induce(mu, &chain.k, v)?;
        let stepwise = induce(mu, &chain.h, &w)?;
        transitivity &= direct.traces() == stepwise.traces() && direct.dets() == stepwise.dets();
    }
    let mut multiplicativity = true;
    let rank1: Vec<&TwistedRep> = reps.iter().filter(|v| v.rank() == 1).collect();
    for (a, b) in rank1.iter().zip(rank1.iter().cycle().skip(1)) {
        let prod = a.twist(b)?;
        let mu2 = mu.mul(mu)?;
        let lhs = verlagerung(&mu2, &chain.k, &prod)?;
        let va = verlagerung(mu, &chain.k, a)?;
        let vb = verlagerung(mu, &chain.k, b)?;
        multiplicativity &= lhs.iter().zip(va.iter().zip(&vb)).all(|(&l, (&x, &y))| l == x * y);
    }
    // δ composition, with trivial multipliers
    let one = Multiplier::trivial(g, lam);
    let one_h = one.restrict(&chain.h);
    let delta_hk: Vec<CoeffElem> = delta_char(&chain.h.group, &k_in_h).into_iter().map(|s| lam.elem(s)).collect();
    let delta_hk = TwistedRep::scalar(&one_h, &delta_hk)?;
    let ver = verlagerung(&one, &chain.h, &delta_hk)?;
    let index_hk = k_in_h.index_in(&chain.h.group) as i64;
    let d_gk = delta_char(g, &chain.k);
    let d_gh = delta_char(g, &chain.h);
    let delta_composition = (0..g.order()).all(|x| lam.elem(d_gk[x]) == lam.elem(d_gh[x]).pow(index_hk) * ver[x]);

    let pass = explicit
        && det_reduction
        && composition
        && multiplicativity
        && delta_composition
        && transitivity
        && independence;
    Ok(VerReport {
        group: g.name().to_string(),
        order: g.order(),
        h_order: chain.h.group.order(),
        k_order: chain.k.group.order(),
        ell: lam.ell(),
        representations: reps.len(),
        explicit_matches_induced: explicit,
        det_reduction,
        composition,
        multiplicativity,
        delta_composition,
        induction_transitivity: transitivity,
        representative_independence: independence,
        pass,
    })
}

// ---------------------------------------------------------------------------
// Seeded suite over a family of groups
// ---------------------------------------------------------------------------

/// The Klein four-group D2 with the multiplier μ(r^a s^b, r^c s^d) = (−1)^{bc}
/// and its rank-2 representation r^a s^b ↦ Z^a X^b (Z = diag(1, −1), X the
/// swap); μ is not a coboundary, since D2 is abelian and μ is not symmetric.
pub fn klein_pauli(lam: PrimeField) -> (Multiplier, TwistedRep) {
    let v4 = FiniteGroup::dihedral(2).expect("D2");
    let sign = |x: usize, y: usize| if (x / 2) * (y % 2) == 1 { lam.elem(-1) } else { lam.one() };
    let table = (0..16).map(|i| sign(i / 4, i % 4)).collect();
    let mu = Multiplier::new(&v4, lam, table).expect("bilinear forms are cocycles");
    let (o, z) = (lam.one(), lam.zero());
    let zmat = Matrix::from_rows(vec![vec![o, z], vec![z, -o]]).expect("square");
    let xmat = Matrix::from_rows(vec![vec![z, o], vec![o, z]]).expect("square");
    let mats = (0..4)
        .map(|x| {
            let a = if x % 2 == 1 { zmat.clone() } else { Matrix::identity(lam, 2) };
            if x / 2 == 1 {
                a.mul(&xmat)
            } else {
                a
            }
        })
        .collect();
    let rep = TwistedRep::new(&mu, mats).expect("Pauli matrices form a twisted representation");
    (mu, rep)
}

/// A surjection G → D2 (as images of every element), if G has a normal
/// subgroup of index 4 with elementary abelian quotient.
pub fn klein_quotient(g: &FiniteGroup) -> Option<Vec<usize>> {
    if !g.order().is_multiple_of(4) {
        return None;
    }
    let v4 = FiniteGroup::dihedral(2).expect("D2");
    for n in g.subgroups() {
        if n.len() * 4 != g.order() {
            continue;
        }
        let inside = |x: usize| n.binary_search(&x).is_ok();
        let normal = (0..g.order()).all(|x| n.iter().all(|&y| inside(g.mul(g.mul(x, y), g.inv(x)))));
        if !normal || !(0..g.order()).all(|x| inside(g.mul(x, x))) {
            continue;
        }
        let sub = g.subgroup(&n).ok()?;
        let cosets = Cosets::new(g, &sub, CosetRule::SmallestIndex);
        let unit = cosets.coset_of[g.identity()];
        let others: Vec<usize> = (0..4).filter(|&c| c != unit).collect();
        let (a, b) = (others[0], others[1]);
        let ab = cosets.coset_of[g.mul(cosets.reps[a], cosets.reps[b])];
        let mut image = [0usize; 4];
        image[a] = 1;
        image[b] = 2;
        image[ab] = 3;
        let phi: Vec<usize> = (0..g.order()).map(|x| image[cosets.coset_of[x]]).collect();
        let hom = (0..g.order()).all(|x| (0..g.order()).all(|y| phi[g.mul(x, y)] == v4.mul(phi[x], phi[y])));
        if hom {
            return Some(phi);
        }
    }
    None
}

/// Sizes of the seeded twisted-group suite.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SuiteOptions {
    pub seed: u64,
    /// Groups up to this order get every subgroup chain K ≤ H ≤ G.
    pub exhaustive_order: usize,
    /// Random chains per larger group.
    pub random_cases: usize,
    /// Random cochains per group for the d², associativity and d¹ checks.
    pub cochain_cases: usize,
}

impl Default for SuiteOptions {
    fn default() -> SuiteOptions {
        SuiteOptions { seed: 0, exhaustive_order: 12, random_cases: 100, cochain_cases: 8 }
    }
}

/// Results of the suite on one group.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GroupReport {
    pub group: String,
    pub order: usize,
    pub exhaustive: bool,
    pub subgroups: usize,
    pub cochain_cases: usize,
    /// d²(d¹λ) ≡ 1.
    pub d2_d1_trivial: bool,
    /// d¹ of a homomorphism is trivial.
    pub homomorphism_coboundary_trivial: bool,
    /// d¹(ρ as a scalar map) = μ for rank-1 ρ.
    pub scalar_d1: bool,
    /// Basis associativity of Λ[G, μ] agrees with the cocycle test, on
    /// cocycles and perturbed cochains.
    pub associativity_iff_cocycle: bool,
    pub non_cocycles_seen: usize,
    /// Regular and induced representations satisfy ρ(g)ρ(h) = μ(g,h)ρ(gh).
    pub representations_valid: bool,
    /// "coboundary", plus "klein" when G maps onto D2.
    pub multipliers: Vec<String>,
    pub chain_cases: usize,
    pub chain_failures: Vec<VerReport>,
    pub pass: bool,
}

/// Results of the suite on a family of groups.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SuiteReport {
    pub ell: u64,
    pub options: SuiteOptions,
    pub groups: Vec<GroupReport>,
    pub pass: bool,
}

fn random_root(rng: &mut ChaCha8Rng, zeta: CoeffElem) -> CoeffElem {
    use rand::Rng;
    zeta.pow(rng.gen_range(0..ROOT_ORDER_BOUND as i64))
}

/// λ: G → μ_24 with λ(1) = 1.
fn random_lambda(rng: &mut ChaCha8Rng, g: &FiniteGroup, zeta: CoeffElem) -> Vec<CoeffElem> {
    let mut lambda: Vec<CoeffElem> = (0..g.order()).map(|_| random_root(rng, zeta)).collect();
    lambda[g.identity()] = zeta.pow(0);
    lambda
}

fn signs(lam: PrimeField, s: &[i64]) -> Vec<CoeffElem> {
    s.iter().map(|&x| lam.elem(x)).collect()
}

/// Representations of (K, μ|K) used on a chain: for μ = d¹λ the characters
/// λ|K and λ|K·δ_{K/K'}, otherwise the restriction of a given
/// representation of G; the twisted regular representation of K when small.
fn chain_reps(
    rng: &mut ChaCha8Rng,
    mu: &Multiplier,
    lambda: Option<&[CoeffElem]>,
    global: Option<&TwistedRep>,
    k: &Subgroup,
) -> Result<Vec<TwistedRep>> {
    let lam = mu.field();
    let mut reps = Vec::new();
    if let Some(lambda) = lambda {
        let chi = coboundary_character(mu, lambda, k)?;
        let subs = k.group.subgroups();
        let kp = k.group.subgroup(subs.choose(rng).expect("K has subgroups"))?;
        let delta = signs(lam, &delta_char(&k.group, &kp));
        let delta = TwistedRep::scalar(&Multiplier::trivial(&k.group, lam), &delta)?;
        reps.push(chi.twist(&delta)?);
        reps.push(chi);
    }
    if let Some(rho) = global {
        reps.push(rho.restrict(k)?);
    }
    if k.group.order() <= 8 {
        reps.push(TwistedRep::regular(&mu.restrict(k))?);
    }
    Ok(reps)
}

fn cochain_checks(
    rng: &mut ChaCha8Rng,
    g: &FiniteGroup,
    lam: PrimeField,
    zeta: CoeffElem,
    cases: usize,
) -> Result<(bool, bool, bool, bool, usize)> {
    use rand::Rng;
    let n = g.order();
    let mut d2d1 = true;
    let mut scalar = true;
    let mut assoc = true;
    let mut non_cocycles = 0;
    for _ in 0..cases {
        let lambda = random_lambda(rng, g, zeta);
        let mu = d1(g, lam, &lambda)?;
        d2d1 &= mu.d2().iter().all(|v| v.is_one());
        let chi = TwistedRep::scalar(&mu, &lambda)?;
        scalar &= d1(g, lam, &chi.scalar_values()?)? == mu;
        assoc &= is_associative(&mu) && is_cocycle(&mu);
        // perturb one entry
        let (a, b) = (rng.gen_range(0..n), rng.gen_range(0..n));
        let mut table = mu.table.clone();
        table[a * n + b] *= zeta.pow(rng.gen_range(1..ROOT_ORDER_BOUND as i64));
        let bent = Multiplier::cochain(g, lam, table)?;
        let cocycle = is_cocycle(&bent);
        non_cocycles += usize::from(!cocycle);
        assoc &= is_associative(&bent) == cocycle;
    }
    // δ characters are homomorphisms, so their coboundaries vanish.
    let mut hom = true;
    for h in g.subgroups() {
        let sub = g.subgroup(&h)?;
        hom &= d1(g, lam, &signs(lam, &delta_char(g, &sub)))?.is_trivial();
    }
    Ok((d2d1, hom, scalar, assoc, non_cocycles))
}

/// Runs the whole twisted-group suite on one group.
pub fn group_suite(g: &FiniteGroup, lam: PrimeField, opts: &SuiteOptions, seed: u64) -> Result<GroupReport> {
    use rand::Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let zeta = lam.root_of_unity(ROOT_ORDER_BOUND)?;
    let (d2d1, hom, scalar, assoc, non_cocycles) = cochain_checks(&mut rng, g, lam, zeta, opts.cochain_cases)?;

    let subs = g.subgroups();
    let exhaustive = g.order() <= opts.exhaustive_order;
    let contained = |k: &[usize], h: &[usize]| k.iter().all(|x| h.binary_search(x).is_ok());
    let chains: Vec<(usize, usize)> = if exhaustive {
        (0..subs.len())
            .flat_map(|h| (0..subs.len()).map(move |k| (h, k)))
            .filter(|&(h, k)| contained(&subs[k], &subs[h]))
            .collect()
    } else {
        (0..opts.random_cases)
            .map(|_| {
                let h = rng.gen_range(0..subs.len());
                let inner: Vec<usize> = (0..subs.len()).filter(|&k| contained(&subs[k], &subs[h])).collect();
                (h, *inner.choose(&mut rng).expect("{1} ≤ H"))
            })
            .collect()
    };

    let lambda = random_lambda(&mut rng, g, zeta);
    let coboundary = d1(g, lam, &lambda)?;
    let mut multipliers = vec![("coboundary".to_string(), coboundary.clone(), Some(lambda.clone()), None)];
    if let Some(phi) = klein_quotient(g) {
        let (_, pauli) = klein_pauli(lam);
        let lifted = pauli.pullback(g, &phi)?;
        let chi = TwistedRep::scalar(&coboundary, &lambda)?;
        let rho = lifted.twist(&chi)?;
        multipliers.push(("klein".to_string(), rho.multiplier().clone(), None, Some(rho)));
    }

    let mut valid = true;
    let mut failures = Vec::new();
    for (_, mu, lambda, rho) in &multipliers {
        TwistedRep::regular(mu)?.validate()?;
        for (i, &(h, k)) in chains.iter().enumerate() {
            let chain = Chain::new(g, &subs[h], &subs[k])?;
            let reps = chain_reps(&mut rng, mu, lambda.as_deref(), rho.as_ref(), &chain.k)?;
            if i == 0 {
                // one induced representation per multiplier, re-validated in full
                valid &= induce(mu, &chain.k, &reps[0])?.validate().is_ok();
            }
            let report = check_ver_identities(mu, &chain, &reps, seed ^ i as u64)?;
            if !report.pass {
                failures.push(report);
            }
        }
    }
    let pass = d2d1 && hom && scalar && assoc && valid && failures.is_empty() && (g.order() == 1 || non_cocycles > 0);
    Ok(GroupReport {
        group: g.name().to_string(),
        order: g.order(),
        exhaustive,
        subgroups: subs.len(),
        cochain_cases: opts.cochain_cases,
        d2_d1_trivial: d2d1,
        homomorphism_coboundary_trivial: hom,
        scalar_d1: scalar,
        associativity_iff_cocycle: assoc,
        non_cocycles_seen: non_cocycles,
        representations_valid: valid,
        multipliers: multipliers.iter().map(|m| m.0.clone()).collect(),
        chain_cases: chains.len() * multipliers.len(),
        chain_failures: failures,
        pass,
    })
}

/// Runs [`group_suite`] on every group in parallel; group i uses the seed
/// `opts.seed + i`, so the report does not depend on scheduling.
pub fn twisted_suite(groups: &[FiniteGroup], lam: PrimeField, opts: &SuiteOptions) -> Result<SuiteReport> {
    use rayon::prelude::*;
    let reports: Result<Vec<GroupReport>> = groups
        .par_iter()
        .enumerate()
        .map(|(i, g)| group_suite(g, lam, opts, opts.seed.wrapping_add(i as u64)))
        .collect();
    let groups = reports?;
    let pass = groups.iter().all(|g| g.pass);
    Ok(SuiteReport { ell: lam.ell(), options: opts.clone(), groups, pass })
}
