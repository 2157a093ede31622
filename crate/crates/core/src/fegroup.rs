//! Exact-rational calculus for the functional-equation group generated by
//! φ(s,w) = (1−s, w+3s−3/2) and ψ(s,w) = (s+w−1/2, 1−w), the completion
//! factor ξ and tube-domain continuation in the (σ, τ)-plane.
//!
//! Regions are finite unions of convex pieces; a piece is an intersection of
//! rational half-planes aσ + bτ > c (or ≥ c). Hulls go through the
//! V-representation (vertices plus recession rays), so unbounded pieces and
//! pieces with no common points are handled uniformly.

use crate::error::{Error, Result};
use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::collections::HashSet;
use std::fmt;

pub type Q = BigRational;
pub type Pt = [Q; 2];

pub fn q(n: i64, d: i64) -> Q {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn qi(n: i64) -> Q {
    BigRational::from_integer(BigInt::from(n))
}

pub fn pt(x: Q, y: Q) -> Pt {
    [x, y]
}

fn big_gcd(mut a: BigInt, mut b: BigInt) -> BigInt {
    a = a.abs();
    b = b.abs();
    while !b.is_zero() {
        let r = &a % &b;
        a = b;
        b = r;
    }
    a
}

/// Positive rescaling to coprime integers.
fn integer_normalize(v: &[Q]) -> Vec<Q> {
    let mut lcm = BigInt::one();
    for x in v {
        let d = x.denom().clone();
        let g = big_gcd(lcm.clone(), d.clone());
        lcm = &lcm / &g * d;
    }
    let ints: Vec<BigInt> = v.iter().map(|x| (x * BigRational::from_integer(lcm.clone())).to_integer()).collect();
    let mut g = BigInt::zero();
    for x in &ints {
        g = big_gcd(g, x.clone());
    }
    if g.is_zero() {
        return v.to_vec();
    }
    ints.into_iter().map(|x| BigRational::from_integer(x / &g)).collect()
}

fn dot(a: &Pt, b: &Pt) -> Q {
    &a[0] * &b[0] + &a[1] * &b[1]
}

fn to_f64(x: &Q) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

fn fmt_linear(f: &mut fmt::Formatter<'_>, coeffs: &[Q; 2], c: &Q, vars: [&str; 2]) -> fmt::Result {
    let mut first = true;
    for (k, v) in coeffs.iter().zip(vars) {
        if k.is_zero() {
            continue;
        }
        let sign = if k.is_negative() { "−" } else if first { "" } else { "+" };
        let mag = k.abs();
        let sep = if first { "" } else { " " };
        let sp = if first || sign.is_empty() { "" } else { " " };
        if mag.is_one() {
            write!(f, "{sep}{sign}{sp}{v}")?;
        } else {
            write!(f, "{sep}{sign}{sp}{mag}{v}")?;
        }
        first = false;
    }
    if first {
        return write!(f, "{c}");
    }
    if !c.is_zero() {
        let sign = if c.is_negative() { "−" } else { "+" };
        write!(f, " {sign} {}", c.abs())?;
    }
    Ok(())
}

/// x ↦ Mx + t on (s, w).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct AffineMap2 {
    pub m: [[Q; 2]; 2],
    pub t: Pt,
}

impl AffineMap2 {
    pub fn new(m: [[Q; 2]; 2], t: Pt) -> Result<Self> {
        let map = AffineMap2 { m, t };
        if map.det().is_zero() {
            return Err(Error::Domain("affine map is not invertible".into()));
        }
        Ok(map)
    }

    pub fn identity() -> Self {
        AffineMap2 { m: [[qi(1), qi(0)], [qi(0), qi(1)]], t: [qi(0), qi(0)] }
    }

    pub fn phi() -> Self {
        AffineMap2 { m: [[qi(-1), qi(0)], [qi(3), qi(1)]], t: [qi(1), q(-3, 2)] }
    }

    pub fn psi() -> Self {
        AffineMap2 { m: [[qi(1), qi(1)], [qi(0), qi(-1)]], t: [q(-1, 2), qi(1)] }
    }

    pub fn det(&self) -> Q {
        &self.m[0][0] * &self.m[1][1] - &self.m[0][1] * &self.m[1][0]
    }

    pub fn apply(&self, x: &Pt) -> Pt {
        [dot(&self.m[0], x) + &self.t[0], dot(&self.m[1], x) + &self.t[1]]
    }

    pub fn apply_c(&self, s: Complex64, w: Complex64) -> (Complex64, Complex64) {
        let f = |r: usize| to_f64(&self.m[r][0]) * s + to_f64(&self.m[r][1]) * w + to_f64(&self.t[r]);
        (f(0), f(1))
    }

    /// self ∘ inner.
    pub fn compose(&self, inner: &AffineMap2) -> AffineMap2 {
        let col = |j: usize| [inner.m[0][j].clone(), inner.m[1][j].clone()];
        let m = [
            [dot(&self.m[0], &col(0)), dot(&self.m[0], &col(1))],
            [dot(&self.m[1], &col(0)), dot(&self.m[1], &col(1))],
        ];
        AffineMap2 { m, t: self.apply(&inner.t) }
    }

    pub fn inverse(&self) -> AffineMap2 {
        let d = self.det();
        let m = [
            [&self.m[1][1] / &d, -&self.m[0][1] / &d],
            [-&self.m[1][0] / &d, &self.m[0][0] / &d],
        ];
        let t = [-dot(&m[0], &self.t), -dot(&m[1], &self.t)];
        AffineMap2 { m, t }
    }

    pub fn is_identity(&self) -> bool {
        *self == AffineMap2::identity()
    }

    pub fn power(&self, k: usize) -> AffineMap2 {
        (0..k).fold(AffineMap2::identity(), |acc, _| self.compose(&acc))
    }

    pub fn order(&self, max: usize) -> Option<usize> {
        let mut g = self.clone();
        for k in 1..=max {
            if g.is_identity() {
                return Some(k);
            }
            g = self.compose(&g);
        }
        None
    }

    /// Image of the line (or half-plane boundary) a·x = c.
    fn pull_covector(&self, a: &Pt, c: &Q) -> (Pt, Q) {
        let inv = self.inverse();
        let a2 = [&a[0] * &inv.m[0][0] + &a[1] * &inv.m[1][0], &a[0] * &inv.m[0][1] + &a[1] * &inv.m[1][1]];
        let c2 = c + dot(&a2, &self.t);
        (a2, c2)
    }
}

impl fmt::Display for AffineMap2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(s, w) ↦ (")?;
        fmt_linear(f, &self.m[0], &self.t[0], ["s", "w"])?;
        write!(f, ", ")?;
        fmt_linear(f, &self.m[1], &self.t[1], ["s", "w"])?;
        write!(f, ")")
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroupElement {
    pub word: String,
    pub map: AffineMap2,
}

pub const MAX_COMPOSITIONS: usize = 100;

/// Closure of the generators under composition, breadth first. Words are read
/// right to left (the rightmost letter acts first).
pub fn generate_group(gens: &[(&str, AffineMap2)]) -> Result<Vec<GroupElement>> {
    let mut elems = vec![GroupElement { word: "1".into(), map: AffineMap2::identity() }];
    let mut seen: HashSet<AffineMap2> = HashSet::new();
    seen.insert(AffineMap2::identity());
    let mut compositions = 0;
    let mut i = 0;
    while i < elems.len() {
        for (name, g) in gens {
            compositions += 1;
            if compositions > MAX_COMPOSITIONS {
                return Err(Error::Structural(format!("group not closed after {MAX_COMPOSITIONS} compositions")));
            }
            let h = g.compose(&elems[i].map);
            if seen.insert(h.clone()) {
                let word = if elems[i].word == "1" { name.to_string() } else { format!("{name}{}", elems[i].word) };
                elems.push(GroupElement { word, map: h });
            }
        }
        i += 1;
    }
    Ok(elems)
}

pub fn fe_group() -> Result<Vec<GroupElement>> {
    generate_group(&[("φ", AffineMap2::phi()), ("ψ", AffineMap2::psi())])
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroupRelations {
    pub order: usize,
    pub phi_squared: bool,
    pub psi_squared: bool,
    pub phipsi_sixth: bool,
    pub phipsi_cubed_nontrivial: bool,
}

impl GroupRelations {
    pub fn all_hold(&self) -> bool {
        self.order == 12 && self.phi_squared && self.psi_squared && self.phipsi_sixth && self.phipsi_cubed_nontrivial
    }
}

pub fn check_relations() -> Result<GroupRelations> {
    let (phi, psi) = (AffineMap2::phi(), AffineMap2::psi());
    let pp = phi.compose(&psi);
    Ok(GroupRelations {
        order: fe_group()?.len(),
        phi_squared: phi.power(2).is_identity(),
        psi_squared: psi.power(2).is_identity(),
        phipsi_sixth: pp.power(6).is_identity(),
        phipsi_cubed_nontrivial: !pp.power(3).is_identity(),
    })
}

/// Rational line a·s + b·w = c, normalized to coprime integers with the first
/// nonzero coefficient positive.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LineQ {
    pub a: Q,
    pub b: Q,
    pub c: Q,
}

impl LineQ {
    pub fn new(a: Q, b: Q, c: Q) -> Result<Self> {
        if a.is_zero() && b.is_zero() {
            return Err(Error::Domain("line with zero normal".into()));
        }
        let mut v = integer_normalize(&[a, b, c]);
        let lead = if v[0].is_zero() { &v[1] } else { &v[0] };
        if lead.is_negative() {
            v.iter_mut().for_each(|x| *x = -x.clone());
        }
        let [a, b, c]: [Q; 3] = v.try_into().unwrap();
        Ok(LineQ { a, b, c })
    }

    pub fn contains(&self, x: &Pt) -> bool {
        &self.a * &x[0] + &self.b * &x[1] == self.c
    }

    /// Image under `map`, i.e. the inverse image under map⁻¹.
    pub fn transport(&self, map: &AffineMap2) -> LineQ {
        let (a, c) = map.pull_covector(&[self.a.clone(), self.b.clone()], &self.c);
        let [a0, a1] = a;
        LineQ::new(a0, a1, c).expect("invertible maps keep normals nonzero")
    }
}

impl fmt::Display for LineQ {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_linear(f, &[self.a.clone(), self.b.clone()], &-self.c.clone(), ["s", "w"])?;
        write!(f, " = 0")
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AffineSubspace {
    Empty,
    Point(Pt),
    Line(LineQ),
    Plane,
}

/// Solution set of map(x) = x.
pub fn fixed_points(map: &AffineMap2) -> AffineSubspace {
    let a = [
        [&map.m[0][0] - qi(1), map.m[0][1].clone()],
        [map.m[1][0].clone(), &map.m[1][1] - qi(1)],
    ];
    let b = [-map.t[0].clone(), -map.t[1].clone()];
    let det = &a[0][0] * &a[1][1] - &a[0][1] * &a[1][0];
    if !det.is_zero() {
        let x = (&b[0] * &a[1][1] - &a[0][1] * &b[1]) / &det;
        let y = (&a[0][0] * &b[1] - &b[0] * &a[1][0]) / &det;
        return AffineSubspace::Point([x, y]);
    }
    let nonzero: Vec<usize> = (0..2).filter(|&r| !(a[r][0].is_zero() && a[r][1].is_zero())).collect();
    let Some(&k) = nonzero.first() else {
        return if b.iter().all(Zero::is_zero) { AffineSubspace::Plane } else { AffineSubspace::Empty };
    };
    let j = 1 - k;
    let idx = if a[k][0].is_zero() { 1 } else { 0 };
    let lambda = &a[j][idx] / &a[k][idx];
    if b[j] != &lambda * &b[k] {
        return AffineSubspace::Empty;
    }
    AffineSubspace::Line(LineQ::new(a[k][0].clone(), a[k][1].clone(), b[k].clone()).unwrap())
}

/// aσ + bτ > c, or ≥ c when not strict.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct HalfPlane {
    pub a: Q,
    pub b: Q,
    pub c: Q,
    pub strict: bool,
}

impl HalfPlane {
    pub fn new(a: Q, b: Q, c: Q, strict: bool) -> Result<Self> {
        if a.is_zero() && b.is_zero() {
            return Err(Error::Domain("half-plane with zero normal".into()));
        }
        let [a, b, c]: [Q; 3] = integer_normalize(&[a, b, c]).try_into().unwrap();
        Ok(HalfPlane { a, b, c, strict })
    }

    fn open(a: Q, b: Q, c: Q) -> Self {
        Self::new(a, b, c, true).unwrap()
    }

    fn closed(a: Q, b: Q, c: Q) -> Self {
        Self::new(a, b, c, false).unwrap()
    }

    pub fn normal(&self) -> Pt {
        [self.a.clone(), self.b.clone()]
    }

    /// aσ + bτ − c.
    pub fn slack(&self, x: &Pt) -> Q {
        &self.a * &x[0] + &self.b * &x[1] - &self.c
    }

    pub fn contains(&self, x: &Pt) -> bool {
        let v = self.slack(x);
        if self.strict {
            v.is_positive()
        } else {
            !v.is_negative()
        }
    }

    pub fn closure_contains(&self, x: &Pt) -> bool {
        !self.slack(x).is_negative()
    }

    pub fn transform(&self, map: &AffineMap2) -> HalfPlane {
        let (a, c) = map.pull_covector(&self.normal(), &self.c);
        let [a0, a1] = a;
        HalfPlane::new(a0, a1, c, self.strict).expect("invertible maps keep normals nonzero")
    }

    fn same_boundary(&self, o: &HalfPlane) -> bool {
        self.a == o.a && self.b == o.b && self.c == o.c
    }
}

impl fmt::Display for HalfPlane {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_linear(f, &[self.a.clone(), self.b.clone()], &Q::zero(), ["σ", "τ"])?;
        write!(f, " {} {}", if self.strict { ">" } else { "≥" }, self.c)
    }
}

/// Vertices (or boundary points, when there are none) and recession rays.
#[derive(Clone, Debug, Default)]
pub struct VRep {
    pub points: Vec<Pt>,
    pub rays: Vec<Pt>,
}

fn push_unique(v: &mut Vec<Pt>, x: Pt) {
    if !v.contains(&x) {
        v.push(x);
    }
}

fn normalize_ray(d: &Pt) -> Pt {
    let v = integer_normalize(d);
    [v[0].clone(), v[1].clone()]
}

fn closure_vrep(hs: &[HalfPlane]) -> Result<VRep> {
    if hs.is_empty() {
        return Ok(VRep {
            points: vec![[qi(0), qi(0)]],
            rays: vec![[qi(1), qi(0)], [qi(-1), qi(0)], [qi(0), qi(1)], [qi(0), qi(-1)]],
        });
    }
    let feasible = |x: &Pt| hs.iter().all(|h| h.closure_contains(x));
    let mut out = VRep::default();
    for i in 0..hs.len() {
        for j in i + 1..hs.len() {
            let (u, v) = (&hs[i], &hs[j]);
            let det = &u.a * &v.b - &v.a * &u.b;
            if det.is_zero() {
                continue;
            }
            let x = [(&u.c * &v.b - &v.c * &u.b) / &det, (&u.a * &v.c - &v.a * &u.c) / &det];
            if feasible(&x) {
                push_unique(&mut out.points, x);
            }
        }
    }
    if out.points.is_empty() {
        for h in hs {
            let n2 = &h.a * &h.a + &h.b * &h.b;
            let x = [&h.c * &h.a / &n2, &h.c * &h.b / &n2];
            if feasible(&x) {
                push_unique(&mut out.points, x);
            }
        }
    }
    if out.points.is_empty() {
        return Err(Error::Domain("empty region piece".into()));
    }
    for h in hs {
        for d in [[-h.b.clone(), h.a.clone()], [h.b.clone(), -h.a.clone()], h.normal()] {
            if hs.iter().all(|g| !dot(&g.normal(), &d).is_negative()) {
                push_unique(&mut out.rays, normalize_ray(&d));
            }
        }
    }
    Ok(out)
}

fn interior_witness(v: &VRep) -> Pt {
    let k = qi(v.points.len() as i64);
    let mut x = [qi(0), qi(0)];
    for p in &v.points {
        x[0] += &p[0] / &k;
        x[1] += &p[1] / &k;
    }
    for r in &v.rays {
        x[0] += &r[0];
        x[1] += &r[1];
    }
    x
}

/// Facets of conv(points) + cone(rays), as open half-planes.
fn hull_hrep(v: &VRep) -> Result<Vec<HalfPlane>> {
    let p0 = v.points.first().ok_or_else(|| Error::Domain("hull of an empty set".into()))?;
    let mut dirs: Vec<(Pt, Pt)> = Vec::new();
    for (i, p) in v.points.iter().enumerate() {
        for qq in &v.points[i + 1..] {
            dirs.push((p.clone(), [&qq[0] - &p[0], &qq[1] - &p[1]]));
        }
        for r in &v.rays {
            dirs.push((p.clone(), r.clone()));
        }
    }
    let spans_plane = dirs.iter().any(|(_, d)| dirs.iter().any(|(_, e)| !(&d[0] * &e[1] - &d[1] * &e[0]).is_zero()));
    if !spans_plane {
        return Err(Error::Domain(format!("degenerate hull through ({}, {})", p0[0], p0[1])));
    }
    let mut out: Vec<HalfPlane> = Vec::new();
    for (p, d) in &dirs {
        for n in [[-d[1].clone(), d[0].clone()], [d[1].clone(), -d[0].clone()]] {
            let c = dot(&n, p);
            let supports = v.points.iter().all(|x| !(dot(&n, x) - &c).is_negative())
                && v.rays.iter().all(|r| !dot(&n, r).is_negative());
            if supports {
                let h = HalfPlane::open(n[0].clone(), n[1].clone(), c);
                if !out.contains(&h) {
                    out.push(h);
                }
            }
        }
    }
    Ok(out)
}

/// Intersection of half-planes with nonempty interior, in canonical form.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Piece {
    pub halfplanes: Vec<HalfPlane>,
}

impl Piece {
    pub fn new(hs: Vec<HalfPlane>) -> Result<Self> {
        let mut hs: Vec<HalfPlane> = hs;
        hs.sort();
        let mut merged: Vec<HalfPlane> = Vec::new();
        for h in hs {
            match merged.last_mut() {
                Some(last) if last.same_boundary(&h) => last.strict |= h.strict,
                _ => merged.push(h),
            }
        }
        let mut i = 0;
        while i < merged.len() {
            let rest: Vec<HalfPlane> = merged.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, h)| h.clone()).collect();
            let h = &merged[i];
            let redundant = closure_vrep(&rest).map_or(false, |v| {
                v.points.iter().all(|x| h.contains(x)) && v.rays.iter().all(|r| !dot(&h.normal(), r).is_negative())
            });
            if redundant {
                merged.remove(i);
            } else {
                i += 1;
            }
        }
        let piece = Piece { halfplanes: merged };
        let v = closure_vrep(&piece.halfplanes)?;
        if !piece.halfplanes.iter().all(|h| h.slack(&interior_witness(&v)).is_positive()) {
            return Err(Error::Domain("region piece has empty interior".into()));
        }
        Ok(piece)
    }

    pub fn whole_plane() -> Self {
        Piece { halfplanes: Vec::new() }
    }

    pub fn contains(&self, x: &Pt) -> bool {
        self.halfplanes.iter().all(|h| h.contains(x))
    }

    pub fn closure_contains(&self, x: &Pt) -> bool {
        self.halfplanes.iter().all(|h| h.closure_contains(x))
    }

    pub fn vrep(&self) -> Result<VRep> {
        closure_vrep(&self.halfplanes)
    }

    pub fn transform(&self, map: &AffineMap2) -> Result<Piece> {
        Piece::new(self.halfplanes.iter().map(|h| h.transform(map)).collect())
    }
}

/// Finite union of convex pieces in the (σ, τ)-plane.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Region {
    pub pieces: Vec<Piece>,
}

impl Region {
    pub fn new(pieces: Vec<Piece>) -> Result<Self> {
        if pieces.is_empty() {
            return Err(Error::Domain("region without pieces".into()));
        }
        Ok(Region { pieces })
    }

    pub fn from_halfplanes(pieces: Vec<Vec<HalfPlane>>) -> Result<Self> {
        Region::new(pieces.into_iter().map(Piece::new).collect::<Result<_>>()?)
    }

    pub fn whole_plane() -> Self {
        Region { pieces: vec![Piece::whole_plane()] }
    }

    pub fn is_whole_plane(&self) -> bool {
        self.pieces.iter().any(|p| p.halfplanes.is_empty())
    }

    pub fn contains(&self, x: &Pt) -> bool {
        self.pieces.iter().any(|p| p.contains(x))
    }

    pub fn closure_contains(&self, x: &Pt) -> bool {
        self.pieces.iter().any(|p| p.closure_contains(x))
    }

    pub fn contains_f64(&self, sigma: f64, tau: f64) -> bool {
        match (BigRational::from_float(sigma), BigRational::from_float(tau)) {
            (Some(s), Some(t)) => self.contains(&[s, t]),
            _ => false,
        }
    }

    pub fn union(&self, other: &Region) -> Region {
        Region { pieces: self.pieces.iter().chain(&other.pieces).cloned().collect() }
    }

    pub fn transform(&self, map: &AffineMap2) -> Result<Region> {
        Region::new(self.pieces.iter().map(|p| p.transform(map)).collect::<Result<_>>()?)
    }

    /// CSV rows `piece,a,b,c,op`, each meaning aσ + bτ op c.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("piece,a,b,c,op\n");
        for (i, p) in self.pieces.iter().enumerate() {
            for h in &p.halfplanes {
                out.push_str(&format!("{i},{},{},{},{}\n", h.a, h.b, h.c, if h.strict { ">" } else { ">=" }));
            }
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Region> {
        let mut pieces: Vec<Vec<HalfPlane>> = Vec::new();
        for (ln, line) in text.lines().enumerate().skip(1) {
            if line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split(',').map(str::trim).collect();
            let bad = || Error::Config(format!("region CSV line {}: {line:?}", ln + 1));
            if f.len() != 5 {
                return Err(bad());
            }
            let idx: usize = f[0].parse().map_err(|_| bad())?;
            let num = |s: &str| s.parse::<BigRational>().map_err(|_| bad());
            let strict = match f[4] {
                ">" => true,
                ">=" => false,
                _ => return Err(bad()),
            };
            if idx >= pieces.len() {
                pieces.resize(idx + 1, Vec::new());
            }
            pieces[idx].push(HalfPlane::new(num(f[1])?, num(f[2])?, num(f[3])?, strict)?);
        }
        Region::from_halfplanes(pieces)
    }

    /// Membership on an n×n grid over [lo, hi]², as `sigma,tau,inside` rows.
    pub fn grid_csv(&self, lo: &Q, hi: &Q, n: usize) -> String {
        let mut out = String::from("sigma,tau,inside\n");
        for x in grid(lo, hi, n) {
            for y in grid(lo, hi, n) {
                let inside = self.contains(&[x.clone(), y.clone()]) as u8;
                out.push_str(&format!("{},{},{inside}\n", to_f64(&x), to_f64(&y)));
            }
        }
        out
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, p) in self.pieces.iter().enumerate() {
            if i > 0 {
                write!(f, " ∪ ")?;
            }
            if p.halfplanes.is_empty() {
                write!(f, "ℝ²")?;
                continue;
            }
            write!(f, "{{")?;
            for (j, h) in p.halfplanes.iter().enumerate() {
                if j > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{h}")?;
            }
            write!(f, "}}")?;
        }
        Ok(())
    }
}

fn grid(lo: &Q, hi: &Q, n: usize) -> Vec<Q> {
    if n <= 1 {
        return vec![lo.clone()];
    }
    let step = (hi - lo) / qi(n as i64 - 1);
    (0..n).map(|i| lo + &step * qi(i as i64)).collect()
}

/// Interior of the closed convex hull of the union; a single open piece.
pub fn hull(regions: &[&Region]) -> Result<Region> {
    let mut all = VRep::default();
    for r in regions {
        for p in &r.pieces {
            let v = p.vrep()?;
            v.points.into_iter().for_each(|x| push_unique(&mut all.points, x));
            v.rays.into_iter().for_each(|d| push_unique(&mut all.rays, d));
        }
    }
    if all.points.is_empty() {
        return Err(Error::Domain("hull of no pieces".into()));
    }
    Region::new(vec![Piece::new(hull_hrep(&all)?)?])
}

pub fn transform_region(map: &AffineMap2, region: &Region) -> Result<Region> {
    region.transform(map)
}

/// R₁ with the ε-margins dropped: two convex pieces.
pub fn region_r1() -> Region {
    Region::from_halfplanes(vec![
        vec![
            HalfPlane::open(qi(3), qi(1), q(5, 2)),
            HalfPlane::open(q(3, 2), qi(1), q(85, 28)),
            HalfPlane::open(qi(0), qi(1), qi(1)),
        ],
        vec![
            HalfPlane::open(qi(1), qi(1), q(13, 7)),
            HalfPlane::open(qi(1), q(1, 2), q(13, 7)),
            HalfPlane::open(qi(1), qi(0), q(19, 14)),
        ],
    ])
    .expect("R1 pieces are nonempty")
}

/// R₁ as the literal three-case systems with margin ε ≥ 0: six pieces.
pub fn region_r1_sampled(eps: &Q) -> Result<Region> {
    if eps.is_negative() {
        return Err(Error::Domain("ε must be nonnegative".into()));
    }
    let lo = q(-5, 14) - eps;
    let hi = q(19, 14) + eps;
    let tlo = -eps.clone();
    let thi = qi(1) + eps;
    Region::from_halfplanes(vec![
        vec![HalfPlane::closed(qi(-1), qi(0), -lo.clone()), HalfPlane::open(qi(3), qi(1), q(5, 2))],
        vec![
            HalfPlane::open(qi(1), qi(0), lo.clone()),
            HalfPlane::open(qi(-1), qi(0), -hi.clone()),
            HalfPlane::open(q(3, 2), qi(1), q(85, 28)),
        ],
        vec![HalfPlane::closed(qi(1), qi(0), hi.clone()), HalfPlane::open(qi(0), qi(1), qi(1))],
        vec![HalfPlane::closed(qi(0), qi(-1), -tlo.clone()), HalfPlane::open(qi(1), qi(1), q(13, 7))],
        vec![
            HalfPlane::open(qi(0), qi(1), tlo.clone()),
            HalfPlane::open(qi(0), qi(-1), -thi.clone()),
            HalfPlane::open(qi(1), q(1, 2), q(13, 7)),
        ],
        vec![HalfPlane::closed(qi(0), qi(1), thi), HalfPlane::open(qi(1), qi(0), q(19, 14))],
    ])
}

/// Membership in R₁ read off the two case systems directly.
pub fn r1_case_membership(eps: &Q, x: &Pt) -> bool {
    let (s, t) = (&x[0], &x[1]);
    let first = if *s <= q(-5, 14) - eps {
        *t > q(5, 2) - qi(3) * s
    } else if *s < q(19, 14) + eps {
        *t > q(85, 28) - q(3, 2) * s
    } else {
        *t > qi(1)
    };
    let second = if *t <= -eps.clone() {
        *s > q(13, 7) - t
    } else if *t < qi(1) + eps {
        *s > q(13, 7) - t / qi(2)
    } else {
        *s > q(19, 14)
    };
    first || second
}

/// {σ > 1/2, τ > 119/124} ∪ {0 ≤ σ ≤ 1/2, τ > −(191/62)σ + 5/2}.
pub fn region_prop56() -> Region {
    Region::from_halfplanes(vec![
        vec![HalfPlane::open(qi(1), qi(0), q(1, 2)), HalfPlane::open(qi(0), qi(1), q(119, 124))],
        vec![
            HalfPlane::closed(qi(1), qi(0), qi(0)),
            HalfPlane::closed(qi(-1), qi(0), q(-1, 2)),
            HalfPlane::open(q(191, 62), qi(1), q(5, 2)),
        ],
    ])
    .expect("Prop 5.6 pieces are nonempty")
}

#[derive(Clone, Debug)]
pub struct BoundaryCheck {
    pub tau_at_half: Q,
    pub expected: Q,
    pub point: Pt,
    pub shared: bool,
}

impl BoundaryCheck {
    pub fn holds(&self) -> bool {
        self.tau_at_half == self.expected && self.shared
    }
}

/// The sloped piece meets the flat piece at σ = 1/2: both closures contain
/// (1/2, τ₀) with τ₀ on both τ-boundaries.
pub fn prop56_boundary_check() -> BoundaryCheck {
    let tau = -q(191, 62) * q(1, 2) + q(5, 2);
    let point = [q(1, 2), tau.clone()];
    let r = region_prop56();
    let on_edge = |p: &Piece| {
        p.closure_contains(&point) && !p.contains(&point) && p.halfplanes.iter().any(|h| !h.b.is_zero() && h.slack(&point).is_zero())
    };
    BoundaryCheck { tau_at_half: tau, expected: q(119, 124), shared: r.pieces.iter().all(on_edge), point }
}

#[derive(Clone, Debug)]
pub struct PipelineStage {
    pub name: &'static str,
    pub region: Region,
}

/// R₂ = hull(R₁ ∪ φR₁), R₃ = hull(R₂ ∪ ψR₂), final = hull(R₃ ∪ φR₃).
pub fn continuation_pipeline(r1: &Region) -> Result<Vec<PipelineStage>> {
    let (phi, psi) = (AffineMap2::phi(), AffineMap2::psi());
    let r2 = hull(&[r1, &r1.transform(&phi)?])?;
    let r3 = hull(&[&r2, &r2.transform(&psi)?])?;
    let fin = hull(&[&r3, &r3.transform(&phi)?])?;
    Ok(vec![
        PipelineStage { name: "R1", region: r1.clone() },
        PipelineStage { name: "R2", region: r2 },
        PipelineStage { name: "R3", region: r3 },
        PipelineStage { name: "final", region: fin },
    ])
}

#[derive(Clone, Debug)]
pub struct BoxCoverage {
    pub samples: usize,
    pub outside: usize,
    pub first_miss: Option<Pt>,
}

impl BoxCoverage {
    pub fn covered(&self) -> bool {
        self.outside == 0
    }
}

pub fn box_coverage(region: &Region, lo: &Q, hi: &Q, n: usize) -> BoxCoverage {
    let mut cov = BoxCoverage { samples: 0, outside: 0, first_miss: None };
    let g = grid(lo, hi, n);
    for x in &g {
        for y in &g {
            cov.samples += 1;
            let p = [x.clone(), y.clone()];
            if !region.contains(&p) {
                cov.outside += 1;
                cov.first_miss.get_or_insert(p);
            }
        }
    }
    cov
}

/// a·s + b·w + c.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LinearForm {
    pub a: Q,
    pub b: Q,
    pub c: Q,
}

impl LinearForm {
    pub fn new(a: Q, b: Q, c: Q) -> Self {
        LinearForm { a, b, c }
    }

    pub fn eval(&self, s: Complex64, w: Complex64) -> Complex64 {
        to_f64(&self.a) * s + to_f64(&self.b) * w + to_f64(&self.c)
    }

    pub fn zero_line(&self) -> LineQ {
        LineQ::new(self.a.clone(), self.b.clone(), -self.c.clone()).expect("linear forms have a nonzero normal")
    }
}

impl fmt::Display for LinearForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_linear(f, &[self.a.clone(), self.b.clone()], &self.c, ["s", "w"])
    }
}

/// Local data at a finite prime of S: norm |P|, Satake parameters γ_j(P) and the
/// character values α(P), β(P).
#[derive(Clone, Debug)]
pub struct LocalFactorData {
    pub norm: u64,
    pub gamma: [Complex64; 3],
    pub alpha: Complex64,
    pub beta: Complex64,
}

#[derive(Clone, Debug)]
pub struct CompletionFactor {
    pub forms: Vec<LinearForm>,
    pub local: Vec<LocalFactorData>,
}

impl CompletionFactor {
    pub fn new(local: Vec<LocalFactorData>) -> Self {
        let forms = vec![
            LinearForm::new(qi(0), qi(1), qi(0)),
            LinearForm::new(qi(0), qi(1), qi(-1)),
            LinearForm::new(qi(3), qi(1), q(-3, 2)),
            LinearForm::new(qi(3), qi(1), q(-5, 2)),
            LinearForm::new(qi(3), qi(2), qi(-3)),
        ];
        CompletionFactor { forms, local }
    }

    pub fn p_value(&self, s: Complex64, w: Complex64) -> Complex64 {
        self.forms.iter().map(|f| f.eval(s, w)).product()
    }

    /// Φ(s,w) = ∏_P ∏_j (1 − α γ_j(P)² |P|^{2s−2}).
    pub fn phi_factor(&self, s: Complex64) -> Complex64 {
        let one = Complex64::new(1.0, 0.0);
        self.local
            .iter()
            .map(|d| {
                let x = Complex64::new(d.norm as f64, 0.0).powc(2.0 * s - 2.0);
                d.gamma.iter().map(|g| one - d.alpha * g * g * x).product::<Complex64>()
            })
            .product()
    }

    /// Ψ(s,w) = ∏_P (1 − β(P)² |P|^{2w−2}).
    pub fn psi_factor(&self, w: Complex64) -> Complex64 {
        let one = Complex64::new(1.0, 0.0);
        self.local
            .iter()
            .map(|d| one - d.beta * d.beta * Complex64::new(d.norm as f64, 0.0).powc(2.0 * w - 2.0))
            .product()
    }

    /// ξ = P · Φ Φ∘φ Φ∘ψ Φ∘ψφ · Ψ Ψ∘φ.
    pub fn xi(&self, s: Complex64, w: Complex64) -> Complex64 {
        let (phi, psi) = (AffineMap2::phi(), AffineMap2::psi());
        let psiphi = psi.compose(&phi);
        let (s1, w1) = phi.apply_c(s, w);
        let (s2, _) = psi.apply_c(s, w);
        let (s3, _) = psiphi.apply_c(s, w);
        self.p_value(s, w)
            * self.phi_factor(s)
            * self.phi_factor(s1)
            * self.phi_factor(s2)
            * self.phi_factor(s3)
            * self.psi_factor(w)
            * self.psi_factor(w1)
    }
}

/// Zero lines of the polynomial part P(s,w).
pub fn polar_divisor(xi: &CompletionFactor) -> Vec<LineQ> {
    xi.forms.iter().map(LinearForm::zero_line).collect()
}

pub fn transport_poles(map: &AffineMap2, lines: &[LineQ]) -> Vec<LineQ> {
    lines.iter().map(|l| l.transport(map)).collect()
}

/// Smallest set of lines containing `seed` and closed under the group.
pub fn line_orbit(group: &[GroupElement], seed: &[LineQ]) -> Vec<LineQ> {
    let mut out: Vec<LineQ> = Vec::new();
    for l in seed {
        for g in group {
            let img = l.transport(&g.map);
            if !out.contains(&img) {
                out.push(img);
            }
        }
    }
    out.sort();
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn group_has_order_twelve() {
        let g = fe_group().unwrap();
        assert_eq!(g.len(), 12);
        assert!(check_relations().unwrap().all_hold());
        let psiphi = AffineMap2::psi().compose(&AffineMap2::phi());
        let expect = AffineMap2::new([[qi(2), qi(1)], [qi(-3), qi(-1)]], [qi(-1), q(5, 2)]).unwrap();
        assert_eq!(psiphi, expect);
        assert_eq!(psiphi.order(20), Some(6));
        assert!(AffineMap2::phi().compose(&AffineMap2::phi()).is_identity());
    }

    #[test]
    fn generation_limit_is_structural() {
        let shift = AffineMap2::new([[qi(1), qi(0)], [qi(0), qi(1)]], [qi(1), qi(0)]).unwrap();
        assert_eq!(generate_group(&[("t", shift)]).unwrap_err().code(), "E_STRUCTURAL");
    }

    #[test]
    fn fixed_points_and_images() {
        let x = [q(1, 2), qi(1)];
        assert_eq!(AffineMap2::phi().apply(&x), x);
        assert_eq!(AffineMap2::psi().apply(&x), [qi(1), qi(0)]);
        assert_eq!(fixed_points(&AffineMap2::identity()), AffineSubspace::Plane);
        match fixed_points(&AffineMap2::phi()) {
            AffineSubspace::Line(l) => assert!(l.contains(&x)),
            other => panic!("{other:?}"),
        }
        let rot = AffineMap2::phi().compose(&AffineMap2::psi());
        assert!(matches!(fixed_points(&rot), AffineSubspace::Point(_)));
        let shift = AffineMap2::new([[qi(1), qi(0)], [qi(0), qi(1)]], [qi(1), qi(0)]).unwrap();
        assert_eq!(fixed_points(&shift), AffineSubspace::Empty);
    }

    #[test]
    fn inverse_and_display() {
        let m = AffineMap2::psi().compose(&AffineMap2::phi());
        assert!(m.compose(&m.inverse()).is_identity());
        assert_eq!(AffineMap2::phi().to_string(), "(s, w) ↦ (−s + 1, 3s + w − 3/2)");
        assert!(AffineMap2::new([[qi(1), qi(2)], [qi(2), qi(4)]], [qi(0), qi(0)]).is_err());
    }

    #[test]
    fn r1_membership() {
        let r1 = region_r1();
        assert!(r1.contains(&[qi(2), qi(2)]));
        assert!(!r1.contains(&[qi(0), qi(0)]));
        let img = r1.transform(&AffineMap2::phi()).unwrap();
        assert!(img.contains(&[qi(-2), qi(100)]));
    }

    #[test]
    fn prop56_boundary() {
        let c = prop56_boundary_check();
        assert_eq!(c.tau_at_half, q(119, 124));
        assert!(c.holds());
        let r = region_prop56();
        assert!(r.closure_contains(&[q(1, 2), qi(1)]));
        assert!(r.contains(&[q(51, 100), qi(1)]));
        assert!(!r.contains(&[q(51, 100), q(119, 124)]));
    }

    #[test]
    fn pipeline_reaches_whole_plane() {
        let stages = continuation_pipeline(&region_r1()).unwrap();
        assert_eq!(stages.len(), 4);
        let fin = &stages[3].region;
        assert!(fin.is_whole_plane(), "{fin}");
        assert!(box_coverage(fin, &qi(-100), &qi(100), 21).covered());
        assert!(!stages[1].region.is_whole_plane());
    }

    #[test]
    fn hull_of_single_piece_is_itself() {
        let r = region_r1();
        let one = Region { pieces: vec![r.pieces[0].clone()] };
        assert_eq!(hull(&[&one]).unwrap(), one);
        assert!(hull(&[]).is_err());
    }

    #[test]
    fn hull_of_disjoint_unbounded_pieces() {
        let a = Region::from_halfplanes(vec![vec![HalfPlane::open(qi(1), qi(0), qi(5))]]).unwrap();
        let b = Region::from_halfplanes(vec![vec![HalfPlane::open(qi(-1), qi(0), qi(5))]]).unwrap();
        assert!(hull(&[&a, &b]).unwrap().is_whole_plane());
        let strip = Region::from_halfplanes(vec![vec![
            HalfPlane::open(qi(0), qi(1), qi(0)),
            HalfPlane::open(qi(0), qi(-1), qi(-1)),
            HalfPlane::open(qi(1), qi(0), qi(0)),
        ]])
        .unwrap();
        let cone = Region::from_halfplanes(vec![vec![
            HalfPlane::open(qi(0), qi(1), qi(3)),
            HalfPlane::open(qi(1), qi(-1), qi(-10)),
        ]])
        .unwrap();
        let h = hull(&[&strip, &cone]).unwrap();
        assert!(h.contains(&[qi(1), q(1, 2)]) && h.contains(&[qi(-3), qi(2)]));
        assert!(!h.contains(&[qi(0), qi(-1)]) && !h.contains(&[qi(-3), qi(1)]));
    }

    #[test]
    fn empty_piece_rejected() {
        let e = Region::from_halfplanes(vec![vec![
            HalfPlane::open(qi(1), qi(0), qi(1)),
            HalfPlane::open(qi(-1), qi(0), qi(0)),
        ]]);
        assert_eq!(e.unwrap_err().code(), "E_DOMAIN");
    }

    #[test]
    fn canonical_reduction() {
        let p = Piece::new(vec![
            HalfPlane::open(qi(2), qi(0), qi(2)),
            HalfPlane::closed(qi(1), qi(0), qi(1)),
            HalfPlane::open(qi(1), qi(0), qi(-3)),
        ])
        .unwrap();
        assert_eq!(p.halfplanes, vec![HalfPlane::open(qi(1), qi(0), qi(1))]);
    }

    #[test]
    fn csv_roundtrip() {
        for r in [region_r1(), region_prop56(), region_r1_sampled(&q(1, 100)).unwrap()] {
            assert_eq!(Region::from_csv(&r.to_csv()).unwrap(), r);
        }
        let g = region_prop56().grid_csv(&qi(0), &qi(1), 3);
        assert_eq!(g.lines().count(), 10);
    }

    #[test]
    fn polar_lines() {
        let xi = CompletionFactor::new(Vec::new());
        let lines = polar_divisor(&xi);
        let w1 = LineQ::new(qi(0), qi(1), qi(1)).unwrap();
        let l2 = LineQ::new(qi(3), qi(1), q(5, 2)).unwrap();
        assert!(lines.contains(&w1) && lines.contains(&l2));
        assert_eq!(w1.transport(&AffineMap2::phi()), l2);
        let x = [q(1, 2), qi(1)];
        assert!(w1.contains(&x) && l2.contains(&x));
        let v = xi.p_value(Complex64::new(0.5, 0.0), Complex64::new(1.0, 0.0));
        assert!(v.norm() < 1e-15);
    }

    #[test]
    fn polar_orbit_is_finite_and_closed() {
        let g = fe_group().unwrap();
        let xi = CompletionFactor::new(Vec::new());
        let orbit = line_orbit(&g, &polar_divisor(&xi));
        assert!(orbit.len() <= 60);
        for e in &g {
            for l in transport_poles(&e.map, &orbit) {
                assert!(orbit.contains(&l));
            }
        }
    }

    #[test]
    fn xi_local_factors() {
        let d = LocalFactorData {
            norm: 2,
            gamma: [Complex64::new(1.0, 0.0); 3],
            alpha: Complex64::new(1.0, 0.0),
            beta: Complex64::new(-1.0, 0.0),
        };
        let xi = CompletionFactor::new(vec![d]);
        let s = Complex64::new(0.3, 0.2);
        let expect = (Complex64::new(1.0, 0.0) - Complex64::new(2.0, 0.0).powc(2.0 * s - 2.0)).powi(3);
        assert!((xi.phi_factor(s) - expect).norm() < 1e-14);
        assert!(xi.psi_factor(Complex64::new(1.0, 0.0)).norm() < 1e-15);
        assert!(xi.xi(Complex64::new(0.5, 0.0), Complex64::new(1.0, 0.0)).norm() < 1e-15);
    }
}
