//! Counting simultaneous window-smooth values of shifted linear forms over
//! lattice points of a dilated convex body, the local density factors
//! `beta_p`, their partial products, and the A+B=C census.

use crate::chars::{gcd, pow_mod};
use crate::error::{Error, Result};
use crate::exec::{self, ExecMode};
use crate::kahan::Kahan;
use crate::rat::Rat;
use crate::saddle::Saddle;
use crate::sieve::{fold_segments_with_count, psi, smooth_numbers, SieveConfig, SmoothWindow};
use crate::weights::{g_from_count, primes_strictly_below, AlphaBuckets};
use serde::Serialize;

const ENUMERATION_CAP: u64 = 10_000_000;
const LATTICE_BUDGET: u128 = 10_000_000_000;
const ABC_BUDGET: u64 = 100_000;

/// The integration body: an axis-aligned box or a simplex with rational
/// vertices inside `[-1, 1]^s`.
#[derive(Clone, Debug, Serialize)]
pub enum Body {
    Box { lo: Vec<Rat>, hi: Vec<Rat> },
    Simplex { vertices: Vec<Vec<Rat>> },
}

/// `sum of coeffs . n <= rhs * N`, integer-scaled.
#[derive(Clone, Debug)]
struct HalfSpace {
    coeffs: Vec<i128>,
    rhs: i128,
}

impl Body {
    pub fn dim(&self) -> usize {
        match self {
            Body::Box { lo, .. } => lo.len(),
            Body::Simplex { vertices } => vertices.first().map(|v| v.len()).unwrap_or(0),
        }
    }

    pub fn vertices(&self) -> Vec<Vec<Rat>> {
        match self {
            Body::Box { lo, hi } => {
                let s = lo.len();
                (0..1usize << s)
                    .map(|mask| {
                        (0..s)
                            .map(|i| if mask >> i & 1 == 1 { hi[i] } else { lo[i] })
                            .collect()
                    })
                    .collect()
            }
            Body::Simplex { vertices } => vertices.clone(),
        }
    }

    fn validate(&self) -> Result<()> {
        let s = self.dim();
        if s == 0 {
            return Err(Error::domain("body needs dimension >= 1"));
        }
        match self {
            Body::Box { lo, hi } => {
                if lo.len() != hi.len() {
                    return Err(Error::domain("box bounds have mismatched dimensions"));
                }
                for (l, h) in lo.iter().zip(hi) {
                    if l.checked_cmp(h)? != std::cmp::Ordering::Less {
                        return Err(Error::domain("box needs lo < hi in every coordinate"));
                    }
                }
            }
            Body::Simplex { vertices } => {
                if vertices.len() != s + 1 {
                    return Err(Error::domain(format!(
                        "simplex in dimension {s} needs {} vertices, got {}",
                        s + 1,
                        vertices.len()
                    )));
                }
                if vertices.iter().any(|v| v.len() != s) {
                    return Err(Error::domain("simplex vertices have mismatched dimensions"));
                }
            }
        }
        let one = Rat::ONE;
        for v in self.vertices() {
            for c in v {
                if c.checked_cmp(&one)? == std::cmp::Ordering::Greater
                    || c.checked_cmp(&one.neg())? == std::cmp::Ordering::Less
                {
                    return Err(Error::domain("body must lie inside [-1, 1]^s"));
                }
            }
        }
        if self.volume()? <= 0.0 {
            return Err(Error::domain("body must have positive volume"));
        }
        Ok(())
    }

    pub fn volume(&self) -> Result<f64> {
        match self {
            Body::Box { lo, hi } => {
                let mut vol = Rat::ONE;
                for (l, h) in lo.iter().zip(hi) {
                    vol = vol.checked_mul(&h.checked_sub(l)?)?;
                }
                Ok(vol.to_f64())
            }
            Body::Simplex { vertices } => {
                let s = self.dim();
                let mut m = Vec::with_capacity(s);
                for v in &vertices[1..] {
                    let row: Result<Vec<Rat>> = v
                        .iter()
                        .zip(&vertices[0])
                        .map(|(a, b)| a.checked_sub(b))
                        .collect();
                    m.push(row?);
                }
                let det = rat_determinant(&mut m)?;
                let mut fact = 1.0f64;
                for k in 2..=s {
                    fact *= k as f64;
                }
                Ok(det.to_f64().abs() / fact)
            }
        }
    }

    /// The body as an intersection of integer-scaled half-spaces.
    fn halfspaces(&self) -> Result<Vec<HalfSpace>> {
        let s = self.dim();
        let mut out = Vec::new();
        match self {
            Body::Box { lo, hi } => {
                for i in 0..s {
                    // n_i <= hi_i N and -n_i <= -lo_i N.
                    let mut up = vec![0i128; s];
                    up[i] = hi[i].den();
                    out.push(HalfSpace {
                        coeffs: up,
                        rhs: hi[i].num(),
                    });
                    let mut down = vec![0i128; s];
                    down[i] = -lo[i].den();
                    out.push(HalfSpace {
                        coeffs: down,
                        rhs: -lo[i].num(),
                    });
                }
            }
            Body::Simplex { vertices } => {
                for omit in 0..vertices.len() {
                    let pts: Vec<&Vec<Rat>> = vertices
                        .iter()
                        .enumerate()
                        .filter(|&(i, _)| i != omit)
                        .map(|(_, v)| v)
                        .collect();
                    // Normal to the hyperplane through pts via the
                    // generalized cross product of the edge vectors.
                    let mut edges = Vec::with_capacity(s - 1);
                    for v in &pts[1..] {
                        let row: Result<Vec<Rat>> = v
                            .iter()
                            .zip(pts[0])
                            .map(|(a, b)| a.checked_sub(b))
                            .collect();
                        edges.push(row?);
                    }
                    let mut normal = Vec::with_capacity(s);
                    for k in 0..s {
                        let mut minor: Vec<Vec<Rat>> = edges
                            .iter()
                            .map(|row| {
                                row.iter()
                                    .enumerate()
                                    .filter(|&(c, _)| c != k)
                                    .map(|(_, v)| *v)
                                    .collect()
                            })
                            .collect();
                        let det = rat_determinant(&mut minor)?;
                        normal.push(if k % 2 == 0 { det } else { det.neg() });
                    }
                    let mut offset = Rat::ZERO;
                    for (a, x) in normal.iter().zip(pts[0]) {
                        offset = offset.checked_add(&a.checked_mul(x)?)?;
                    }
                    // Orient so the omitted vertex satisfies the inequality.
                    let mut at_omitted = Rat::ZERO;
                    for (a, x) in normal.iter().zip(&vertices[omit]) {
                        at_omitted = at_omitted.checked_add(&a.checked_mul(x)?)?;
                    }
                    let flip = at_omitted.checked_cmp(&offset)? == std::cmp::Ordering::Greater;
                    let (normal, offset) = if flip {
                        (normal.iter().map(Rat::neg).collect::<Vec<_>>(), offset.neg())
                    } else {
                        (normal, offset)
                    };
                    // Clear denominators.
                    let mut scale: i128 = offset.den();
                    for a in &normal {
                        let g = {
                            let (mut x, mut y) = (scale, a.den());
                            while y != 0 {
                                (x, y) = (y, x % y);
                            }
                            x
                        };
                        scale = scale
                            .checked_mul(a.den() / g)
                            .ok_or_else(|| Error::capacity("half-space scaling overflow".to_string()))?;
                    }
                    let coeffs = normal
                        .iter()
                        .map(|a| a.num() * (scale / a.den()))
                        .collect();
                    out.push(HalfSpace {
                        coeffs,
                        rhs: offset.num() * (scale / offset.den()),
                    });
                }
            }
        }
        Ok(out)
    }
}

fn rat_determinant(m: &mut [Vec<Rat>]) -> Result<Rat> {
    let n = m.len();
    if n == 0 {
        return Ok(Rat::ONE);
    }
    let mut det = Rat::ONE;
    for col in 0..n {
        let pivot = (col..n).find(|&r| m[r][col] != Rat::ZERO);
        let Some(pivot) = pivot else {
            return Ok(Rat::ZERO);
        };
        if pivot != col {
            m.swap(pivot, col);
            det = det.neg();
        }
        let p = m[col][col];
        det = det.checked_mul(&p)?;
        for row in col + 1..n {
            let factor = m[row][col].checked_div(&p)?;
            for c in col..n {
                let sub = factor.checked_mul(&m[col][c])?;
                m[row][c] = m[row][c].checked_sub(&sub)?;
            }
        }
    }
    Ok(det)
}

/// A system of `r` shifted linear forms in `s` variables over a body.
#[derive(Clone, Debug, Serialize)]
pub struct LinearSystem {
    pub s: usize,
    pub r: usize,
    pub forms: Vec<Vec<i64>>,
    pub shifts: Vec<i64>,
    pub body: Body,
    /// Largest absolute coefficient.
    pub l_max: i64,
}

impl LinearSystem {
    pub fn new(forms: Vec<Vec<i64>>, shifts: Vec<i64>, body: Body) -> Result<LinearSystem> {
        let r = forms.len();
        if r == 0 {
            return Err(Error::domain("system needs at least one form"));
        }
        let s = body.dim();
        if forms.iter().any(|f| f.len() != s) {
            return Err(Error::domain(format!("every form needs {s} coefficients")));
        }
        if shifts.len() != r {
            return Err(Error::domain(format!("expected {r} shifts")));
        }
        body.validate()?;
        for f in &forms {
            if f.iter().all(|&c| c == 0) {
                return Err(Error::domain("zero forms are not allowed"));
            }
        }
        // Pairwise linear independence via 2x2 minors.
        for i in 0..r {
            for j in i + 1..r {
                let dependent = (0..s).all(|k| {
                    (0..s).all(|l| {
                        forms[i][k] as i128 * forms[j][l] as i128
                            == forms[i][l] as i128 * forms[j][k] as i128
                    })
                });
                if dependent {
                    return Err(Error::domain(format!(
                        "forms {i} and {j} are linearly dependent over the rationals"
                    )));
                }
            }
        }
        let l_max = forms
            .iter()
            .flat_map(|f| f.iter().map(|c| c.abs()))
            .max()
            .unwrap_or(0);
        Ok(LinearSystem {
            s,
            r,
            forms,
            shifts,
            body,
            l_max,
        })
    }

    fn eval_form(&self, j: usize, point: &[i64]) -> i128 {
        let mut acc = self.shifts[j] as i128;
        for (c, &x) in self.forms[j].iter().zip(point) {
            acc += *c as i128 * x as i128;
        }
        acc
    }

    /// Checks `psi_j(N body) + a_j inside [1, N]` at the body's vertices.
    pub fn forms_contained(&self, n_scale: u64) -> Result<bool> {
        let n_rat = Rat::from_int(n_scale as i64);
        for v in self.body.vertices() {
            for j in 0..self.r {
                let mut acc = Rat::from_int(self.shifts[j]);
                for (c, x) in self.forms[j].iter().zip(&v) {
                    let term = Rat::from_int(*c).checked_mul(&x.checked_mul(&n_rat)?)?;
                    acc = acc.checked_add(&term)?;
                }
                if acc.checked_cmp(&Rat::ONE)? == std::cmp::Ordering::Less
                    || acc.checked_cmp(&n_rat)? == std::cmp::Ordering::Greater
                {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }

    /// Canonical one-line-per-field echo of the descriptor.
    pub fn canonical_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("s {}\n", self.s));
        out.push_str(&format!("r {}\n", self.r));
        for f in &self.forms {
            out.push_str("form");
            for c in f {
                out.push_str(&format!(" {c}"));
            }
            out.push('\n');
        }
        out.push_str("shifts");
        for a in &self.shifts {
            out.push_str(&format!(" {a}"));
        }
        out.push('\n');
        match &self.body {
            Body::Box { lo, hi } => {
                out.push_str("body box");
                for (l, h) in lo.iter().zip(hi) {
                    out.push_str(&format!(" {}/{} {}/{}", l.num(), l.den(), h.num(), h.den()));
                }
                out.push('\n');
            }
            Body::Simplex { vertices } => {
                out.push_str("body simplex");
                for v in vertices {
                    for c in v {
                        out.push_str(&format!(" {}/{}", c.num(), c.den()));
                    }
                }
                out.push('\n');
            }
        }
        out
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct LocalFactor {
    pub p: u64,
    pub beta: f64,
}

/// `beta_p` by direct enumeration over `(Z/p)^s`.
pub fn local_factor_enumeration(sys: &LinearSystem, p: u64) -> Result<LocalFactor> {
    let ps = (p as u128).checked_pow(sys.s as u32).ok_or_else(|| {
        Error::capacity(format!("p^s overflows at p = {p}, s = {}", sys.s))
    })?;
    if ps > ENUMERATION_CAP as u128 {
        return Err(Error::capacity(format!(
            "enumeration over p^s = {ps} points exceeds the {ENUMERATION_CAP} cap"
        )));
    }
    let mut u = vec![0u64; sys.s];
    let mut survivors = 0u64;
    loop {
        let ok = (0..sys.r).all(|j| {
            let mut acc = sys.shifts[j].rem_euclid(p as i64) as u64;
            for (c, &x) in sys.forms[j].iter().zip(&u) {
                acc = (acc + (c.rem_euclid(p as i64) as u64) * x) % p;
            }
            acc % p != 0
        });
        if ok {
            survivors += 1;
        }
        // Odometer over (Z/p)^s.
        let mut i = 0;
        loop {
            if i == sys.s {
                return Ok(LocalFactor {
                    p,
                    beta: beta_from_survivors(sys, p, survivors as i128),
                });
            }
            u[i] += 1;
            if u[i] < p {
                break;
            }
            u[i] = 0;
            i += 1;
        }
    }
}

/// `beta_p = survivors p^r / ((p-1)^r p^s)` as one exact integer ratio, so
/// degenerate systems give exactly 0 and identity systems exactly 1.
fn beta_from_survivors(sys: &LinearSystem, p: u64, survivors: i128) -> f64 {
    let num = survivors as f64 * (p as f64).powi(sys.r as i32);
    let den = ((p - 1) as f64).powi(sys.r as i32) * (p as f64).powi(sys.s as i32);
    num / den
}

/// `beta_p` by inclusion-exclusion over the vanishing sets of the forms,
/// counting solutions of each subsystem by Gaussian elimination mod p.
pub fn local_factor_inclusion_exclusion(sys: &LinearSystem, p: u64) -> Result<LocalFactor> {
    if sys.r >= 30 {
        return Err(Error::capacity("inclusion-exclusion over 2^r subsets with r >= 30".to_string()));
    }
    let mut signed = 0i128;
    for mask in 0u32..(1 << sys.r) {
        let rows: Vec<usize> = (0..sys.r).filter(|&j| mask >> j & 1 == 1).collect();
        let (rank, consistent) = subsystem_rank_mod_p(sys, &rows, p);
        let count: i128 = if consistent {
            (p as i128).pow((sys.s - rank) as u32)
        } else {
            0
        };
        signed += if rows.len() % 2 == 0 { count } else { -count };
    }
    Ok(LocalFactor {
        p,
        beta: beta_from_survivors(sys, p, signed),
    })
}

/// Rank and consistency of `psi_j(u) = -a_j mod p` for the selected rows.
fn subsystem_rank_mod_p(sys: &LinearSystem, rows: &[usize], p: u64) -> (usize, bool) {
    let mut m: Vec<Vec<u64>> = rows
        .iter()
        .map(|&j| {
            let mut row: Vec<u64> = sys.forms[j]
                .iter()
                .map(|c| c.rem_euclid(p as i64) as u64)
                .collect();
            row.push((-sys.shifts[j]).rem_euclid(p as i64) as u64);
            row
        })
        .collect();
    let cols = sys.s;
    let mut rank = 0usize;
    for col in 0..cols {
        let Some(pivot) = (rank..m.len()).find(|&r| m[r][col] % p != 0) else {
            continue;
        };
        m.swap(rank, pivot);
        let inv = pow_mod(m[rank][col], p - 2, p);
        for c in col..=cols {
            m[rank][c] = m[rank][c] % p * inv % p;
        }
        for r in 0..m.len() {
            if r != rank && m[r][col] % p != 0 {
                let f = m[r][col] % p;
                for c in col..=cols {
                    let sub = f * m[rank][c] % p;
                    m[r][c] = (m[r][c] + p - sub % p) % p;
                }
            }
        }
        rank += 1;
        if rank == m.len() {
            break;
        }
    }
    let consistent = m[rank..].iter().all(|row| row[cols] % p == 0);
    (rank, consistent)
}

/// Dispatch: enumeration when `p^s` is small, inclusion-exclusion otherwise.
pub fn local_factor(sys: &LinearSystem, p: u64) -> Result<LocalFactor> {
    let ps = (p as u128).checked_pow(sys.s as u32);
    match ps {
        Some(v) if v <= 1_000_000 => local_factor_enumeration(sys, p),
        _ => local_factor_inclusion_exclusion(sys, p),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SingularSeries {
    pub value: f64,
    /// Running partial products `(p, prod over primes < p including p)`.
    pub partials: Vec<(u64, f64)>,
}

/// `prod over primes p < p_limit of beta_p`.
pub fn singular_series(sys: &LinearSystem, p_limit: f64) -> Result<SingularSeries> {
    if p_limit < 2.0 {
        return Err(Error::domain("singular series needs p_limit >= 2"));
    }
    let mut value = 1.0f64;
    let mut partials = Vec::new();
    for p in primes_strictly_below(p_limit) {
        value *= local_factor(sys, p)?.beta;
        partials.push((p, value));
    }
    Ok(SingularSeries { value, partials })
}

#[derive(Clone, Debug, Serialize)]
pub struct CountReport {
    pub n_scale: u64,
    pub weighted: bool,
    pub count: f64,
    pub lattice_points: u64,
    pub volume: f64,
    pub beta_product: f64,
    pub predicted: f64,
    pub ratio: Option<f64>,
    /// Vertex check of `psi_j(N body) + a_j inside [1, N]`; out-of-range
    /// form values are skipped during enumeration either way.
    pub containment_ok: bool,
}

/// Counts lattice points of `N body` where every form value is
/// window-smooth (optionally weighted by the product of `g` values), against
/// the local-density prediction.
pub fn count_solutions(
    sys: &LinearSystem,
    n_scale: u64,
    w: &SmoothWindow,
    weighted: bool,
) -> Result<CountReport> {
    if n_scale < 2 {
        return Err(Error::domain("count_solutions needs N >= 2"));
    }
    let cfg = SieveConfig::default();
    let mode = ExecMode::default();
    let halfspaces = sys.body.halfspaces()?;
    // Bounding box from the vertices.
    let mut lo = vec![i64::MAX; sys.s];
    let mut hi = vec![i64::MIN; sys.s];
    for v in sys.body.vertices() {
        for (i, c) in v.iter().enumerate() {
            let scaled = c.checked_mul(&Rat::from_int(n_scale as i64))?;
            let fl = (scaled.num() as f64 / scaled.den() as f64).floor() as i64 - 1;
            let ce = (scaled.num() as f64 / scaled.den() as f64).ceil() as i64 + 1;
            lo[i] = lo[i].min(fl);
            hi[i] = hi[i].max(ce);
        }
    }
    let mut points: u128 = 1;
    for i in 0..sys.s {
        points = points.saturating_mul((hi[i] - lo[i] + 1).max(0) as u128);
    }
    if points > LATTICE_BUDGET {
        return Err(Error::capacity(format!(
            "lattice enumeration over {points} points exceeds the {LATTICE_BUDGET} budget"
        )));
    }

    // Evaluate forms largest-typical-value first so non-smooth values prune
    // early.
    let mut order: Vec<usize> = (0..sys.r).collect();
    let magnitude = |j: usize| -> i128 {
        sys.forms[j].iter().map(|c| c.unsigned_abs() as i128).sum::<i128>() * n_scale as i128
            + sys.shifts[j].unsigned_abs() as i128
    };
    order.sort_by_key(|&j| std::cmp::Reverse(magnitude(j)));

    // Precompute membership (and weights) over [1, N] in one pass.
    let y = w.y_hi().max(2.0);
    let saddle = Saddle::new(y)?;
    let buckets = AlphaBuckets::new(&saddle, y, n_scale)?;
    let mut member_of = vec![false; n_scale as usize + 1];
    let mut weight_of = if weighted { vec![0.0f32; n_scale as usize + 1] } else { Vec::new() };
    let chunks = fold_segments_with_count(n_scale, w, &cfg, mode, |_, seg| {
        let mut count = seg.count_before;
        let lo = seg.table.range_lo();
        let mut members = Vec::with_capacity((seg.table.range_hi() - lo) as usize);
        let mut weights = Vec::new();
        for n in lo..seg.table.range_hi() {
            let member = seg.table.is_member(n, w);
            if member {
                count += 1;
            }
            members.push(member);
            if weighted {
                weights.push(g_from_count(n, member, count, buckets.alpha_for(n)) as f32);
            }
        }
        (lo, members, weights)
    })?;
    for (lo, ms, ws) in chunks {
        for (i, m) in ms.into_iter().enumerate() {
            member_of[lo as usize + i] = m;
        }
        if weighted {
            for (i, v) in ws.into_iter().enumerate() {
                weight_of[lo as usize + i] = v;
            }
        }
    }

    // Parallelize over the first coordinate.
    let first_range = (hi[0] - lo[0] + 1) as usize;
    let parts: Vec<(f64, u64)> = exec::map_indexed(mode, first_range, |i0| {
        let x0 = lo[0] + i0 as i64;
        let mut point = vec![0i64; sys.s];
        point[0] = x0;
        let mut acc = Kahan::new();
        let mut visited = 0u64;
        enumerate_rest(
            sys,
            &halfspaces,
            n_scale,
            &lo,
            &hi,
            &order,
            &member_of,
            &weight_of,
            weighted,
            &mut point,
            1,
            &mut acc,
            &mut visited,
        );
        (acc.value(), visited)
    });
    let mut total = Kahan::new();
    let mut lattice_points = 0u64;
    for (v, c) in parts {
        total.add(v);
        lattice_points += c;
    }
    let count = total.value();

    let volume = sys.body.volume()?;
    // The product over p < y' is empty below the first prime.
    let beta_product = if w.y_lo() <= 2.0 {
        1.0
    } else {
        singular_series(sys, w.y_lo())?.value
    };
    let nf = n_scale as f64;
    let predicted = if weighted {
        volume * nf.powi(sys.s as i32) * beta_product
    } else {
        let psi_n = psi(n_scale, w) as f64;
        volume * nf.powi(sys.s as i32 - sys.r as i32) * psi_n.powi(sys.r as i32) * beta_product
    };
    let ratio = if predicted.abs() > 0.0 {
        Some(count / predicted)
    } else {
        None
    };
    Ok(CountReport {
        n_scale,
        weighted,
        count,
        lattice_points,
        volume,
        beta_product,
        predicted,
        ratio,
        containment_ok: sys.forms_contained(n_scale)?,
    })
}

#[allow(clippy::too_many_arguments)]
fn enumerate_rest(
    sys: &LinearSystem,
    halfspaces: &[HalfSpace],
    n_scale: u64,
    lo: &[i64],
    hi: &[i64],
    order: &[usize],
    member_of: &[bool],
    weight_of: &[f32],
    weighted: bool,
    point: &mut Vec<i64>,
    depth: usize,
    acc: &mut Kahan,
    visited: &mut u64,
) {
    if depth < sys.s {
        for x in lo[depth]..=hi[depth] {
            point[depth] = x;
            enumerate_rest(
                sys, halfspaces, n_scale, lo, hi, order, member_of, weight_of, weighted, point,
                depth + 1, acc, visited,
            );
        }
        return;
    }
    *visited += 1;
    for hs in halfspaces {
        let mut dot: i128 = 0;
        for (c, &x) in hs.coeffs.iter().zip(point.iter()) {
            dot += c * x as i128;
        }
        if dot > hs.rhs * n_scale as i128 {
            return;
        }
    }
    let mut product = 1.0f64;
    for &j in order {
        let value = sys.eval_form(j, point);
        if value < 1 || value > n_scale as i128 {
            return;
        }
        let v = value as usize;
        if !member_of[v] {
            return;
        }
        if weighted {
            product *= weight_of[v] as f64;
        }
    }
    acc.add(product);
}

/// Optional run parameters a descriptor file may carry.
#[derive(Clone, Copy, Debug, Default, Serialize)]
pub struct RunSpec {
    pub n_scale: Option<u64>,
    pub y_hi: Option<f64>,
    pub y_lo: Option<f64>,
}

/// Parses the plain-text system descriptor:
///
/// ```text
/// s 2
/// r 3
/// form 1 0
/// form 0 1
/// form 1 1
/// shifts 0 0 0
/// body simplex 0/1 0/1 1/1 0/1 0/1 1/1
/// n 30000
/// y 173
/// yprime 1
/// ```
///
/// `body box` takes `lo hi` rational pairs per coordinate; rationals accept
/// `a/b` or plain integers. Lines starting with `#` are comments.
pub fn parse_system_file(text: &str) -> Result<(LinearSystem, RunSpec)> {
    let mut s: Option<usize> = None;
    let mut r: Option<usize> = None;
    let mut forms: Vec<Vec<i64>> = Vec::new();
    let mut shifts: Option<Vec<i64>> = None;
    let mut body: Option<Body> = None;
    let mut run = RunSpec::default();

    let parse_rat = |tok: &str| -> Result<Rat> {
        if let Some((n, d)) = tok.split_once('/') {
            let n: i128 = n
                .trim()
                .parse()
                .map_err(|_| Error::domain(format!("bad rational numerator: {tok}")))?;
            let d: i128 = d
                .trim()
                .parse()
                .map_err(|_| Error::domain(format!("bad rational denominator: {tok}")))?;
            Rat::new(n, d)
        } else {
            let n: i128 = tok
                .trim()
                .parse()
                .map_err(|_| Error::domain(format!("bad rational: {tok}")))?;
            Rat::new(n, 1)
        }
    };

    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut tokens = line.split_whitespace();
        let key = tokens.next().unwrap();
        let rest: Vec<&str> = tokens.collect();
        let bad = |what: &str| Error::domain(format!("line {}: {what}", lineno + 1));
        match key {
            "s" => {
                s = Some(rest.first().ok_or_else(|| bad("missing s"))?.parse().map_err(|_| bad("bad s"))?)
            }
            "r" => {
                r = Some(rest.first().ok_or_else(|| bad("missing r"))?.parse().map_err(|_| bad("bad r"))?)
            }
            "form" => {
                let row: std::result::Result<Vec<i64>, _> = rest.iter().map(|t| t.parse()).collect();
                forms.push(row.map_err(|_| bad("bad form coefficients"))?);
            }
            "shifts" => {
                let row: std::result::Result<Vec<i64>, _> = rest.iter().map(|t| t.parse()).collect();
                shifts = Some(row.map_err(|_| bad("bad shifts"))?);
            }
            "body" => {
                let kind = *rest.first().ok_or_else(|| bad("missing body kind"))?;
                let coords: Result<Vec<Rat>> = rest[1..].iter().map(|t| parse_rat(t)).collect();
                let coords = coords?;
                let dim = s.ok_or_else(|| bad("state s before body"))?;
                body = Some(match kind {
                    "box" => {
                        if coords.len() != 2 * dim {
                            return Err(bad("box needs lo/hi pairs for every coordinate"));
                        }
                        let mut lo = Vec::with_capacity(dim);
                        let mut hi = Vec::with_capacity(dim);
                        for pair in coords.chunks(2) {
                            lo.push(pair[0]);
                            hi.push(pair[1]);
                        }
                        Body::Box { lo, hi }
                    }
                    "simplex" => {
                        if coords.len() != dim * (dim + 1) {
                            return Err(bad("simplex needs (s+1) vertices of s coordinates"));
                        }
                        Body::Simplex {
                            vertices: coords.chunks(dim).map(|c| c.to_vec()).collect(),
                        }
                    }
                    other => return Err(bad(&format!("unknown body kind {other}"))),
                });
            }
            "n" => {
                run.n_scale = Some(
                    rest.first()
                        .ok_or_else(|| bad("missing n"))?
                        .parse::<f64>()
                        .map_err(|_| bad("bad n"))? as u64,
                )
            }
            "y" => {
                run.y_hi = Some(rest.first().ok_or_else(|| bad("missing y"))?.parse().map_err(|_| bad("bad y"))?)
            }
            "yprime" => {
                run.y_lo = Some(
                    rest.first()
                        .ok_or_else(|| bad("missing yprime"))?
                        .parse()
                        .map_err(|_| bad("bad yprime"))?,
                )
            }
            other => return Err(bad(&format!("unknown key {other}"))),
        }
    }

    let s = s.ok_or_else(|| Error::domain("descriptor missing s"))?;
    let r = r.ok_or_else(|| Error::domain("descriptor missing r"))?;
    if forms.len() != r {
        return Err(Error::domain(format!("descriptor declares r = {r} but has {} forms", forms.len())));
    }
    if forms.iter().any(|f| f.len() != s) {
        return Err(Error::domain(format!("every form needs exactly s = {s} coefficients")));
    }
    let shifts = shifts.ok_or_else(|| Error::domain("descriptor missing shifts"))?;
    let body = body.ok_or_else(|| Error::domain("descriptor missing body"))?;
    let sys = LinearSystem::new(forms, shifts, body)?;
    Ok((sys, run))
}

#[derive(Clone, Debug, Serialize)]
pub struct AbcReport {
    pub n_scale: u64,
    pub coprime_only: bool,
    pub count: u64,
    pub psi: u64,
    pub predicted: f64,
    pub ratio: f64,
}

/// Ordered pairs `(n1, n2)` with `n1 + n2 <= N` and all three of
/// `n1, n2, n1 + n2` window-smooth, against `Psi^3 / (2N)`.
pub fn abc_census(n_scale: u64, w: &SmoothWindow, coprime_only: bool) -> Result<AbcReport> {
    if n_scale < 2 {
        return Err(Error::domain("abc census needs N >= 2"));
    }
    if n_scale > ABC_BUDGET {
        return Err(Error::capacity(format!(
            "abc census pair loop at N = {n_scale} exceeds the {ABC_BUDGET} budget"
        )));
    }
    let members = smooth_numbers(n_scale, w);
    let mut is_member = vec![false; n_scale as usize + 1];
    for &m in &members {
        is_member[m as usize] = true;
    }
    let parts: Vec<u64> = exec::map_indexed(ExecMode::default(), members.len(), |i| {
        let n1 = members[i];
        let mut c = 0u64;
        for &n2 in &members {
            let sum = n1 + n2;
            if sum > n_scale {
                break;
            }
            if is_member[sum as usize] && (!coprime_only || gcd(n1, n2) == 1) {
                c += 1;
            }
        }
        c
    });
    let count: u64 = parts.into_iter().sum();
    let psi_n = members.len() as u64;
    let predicted = (psi_n as f64).powi(3) / (2.0 * n_scale as f64);
    Ok(AbcReport {
        n_scale,
        coprime_only,
        count,
        psi: psi_n,
        predicted,
        ratio: count as f64 / predicted,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rat(n: i128, d: i128) -> Rat {
        Rat::new(n, d).unwrap()
    }

    fn abc_system() -> LinearSystem {
        // n1, n2, n1 + n2 over the simplex {x, y >= 0, x + y <= 1}.
        LinearSystem::new(
            vec![vec![1, 0], vec![0, 1], vec![1, 1]],
            vec![0, 0, 0],
            Body::Simplex {
                vertices: vec![
                    vec![Rat::ZERO, Rat::ZERO],
                    vec![Rat::ONE, Rat::ZERO],
                    vec![Rat::ZERO, Rat::ONE],
                ],
            },
        )
        .unwrap()
    }

    #[test]
    fn body_volumes() {
        let b = Body::Box {
            lo: vec![Rat::ZERO, rat(-1, 2)],
            hi: vec![Rat::ONE, rat(1, 2)],
        };
        assert_eq!(b.volume().unwrap(), 1.0);
        assert_eq!(abc_system().body.volume().unwrap(), 0.5);
    }

    #[test]
    fn body_validation() {
        assert!(Body::Box {
            lo: vec![Rat::ZERO],
            hi: vec![Rat::ZERO],
        }
        .validate()
        .is_err());
        assert!(Body::Box {
            lo: vec![rat(-3, 2)],
            hi: vec![Rat::ONE],
        }
        .validate()
        .is_err());
    }

    #[test]
    fn system_rejects_dependent_forms() {
        let body = Body::Box {
            lo: vec![Rat::ZERO, Rat::ZERO],
            hi: vec![Rat::ONE, Rat::ONE],
        };
        let err = LinearSystem::new(
            vec![vec![1, 2], vec![2, 4]],
            vec![0, 0],
            body,
        );
        assert!(err.is_err());
    }

    #[test]
    fn local_factor_identity_form() {
        // A single coordinate form has beta_p = 1 exactly.
        let sys = LinearSystem::new(
            vec![vec![1, 0]],
            vec![0],
            Body::Box {
                lo: vec![rat(1, 100), rat(1, 100)],
                hi: vec![Rat::ONE, Rat::ONE],
            },
        )
        .unwrap();
        for p in [2u64, 3, 5, 97] {
            let lf = local_factor_enumeration(&sys, p).unwrap();
            assert!((lf.beta - 1.0).abs() < 1e-15, "p = {p}: {}", lf.beta);
        }
    }

    #[test]
    fn local_factor_abc_at_two_vanishes() {
        // No all-odd solutions of n1 + n2 = n3 mod 2.
        let lf = local_factor_enumeration(&abc_system(), 2).unwrap();
        assert_eq!(lf.beta, 0.0);
    }

    #[test]
    fn local_factor_dual_paths_agree() {
        let sys = abc_system();
        let shifted = LinearSystem::new(
            vec![vec![1, 0], vec![0, 1], vec![1, 1]],
            vec![0, 0, 1],
            sys.body.clone(),
        )
        .unwrap();
        for system in [&sys, &shifted] {
            for p in [2u64, 3, 5, 7, 11, 101, 313] {
                let a = local_factor_enumeration(system, p).unwrap().beta;
                let b = local_factor_inclusion_exclusion(system, p).unwrap().beta;
                assert!((a - b).abs() <= 1e-12, "p = {p}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn local_factor_tends_to_one() {
        // beta_p = 1 - 1/(p-1)^2 for the A+B=C system: C is about 1.
        let sys = abc_system();
        for p in [5u64, 11, 31, 101, 997] {
            let lf = local_factor(&sys, p).unwrap();
            let expect = 1.0 - 1.0 / ((p - 1) as f64 * (p - 1) as f64);
            assert!((lf.beta - expect).abs() < 1e-12, "p = {p}");
            assert!((lf.beta - 1.0).abs() <= 1.01 / (p as f64 * p as f64 / 4.0));
        }
    }

    #[test]
    fn singular_series_examples() {
        let sys = abc_system();
        // Empty product below 2.
        assert_eq!(singular_series(&sys, 2.0).unwrap().value, 1.0);
        // Any limit above 2 includes beta_2 = 0.
        assert_eq!(singular_series(&sys, 10.0).unwrap().value, 0.0);
        // Identity system keeps the product at 1.
        let id = LinearSystem::new(
            vec![vec![1, 0]],
            vec![0],
            Body::Box {
                lo: vec![rat(1, 100), rat(1, 100)],
                hi: vec![Rat::ONE, Rat::ONE],
            },
        )
        .unwrap();
        assert_eq!(singular_series(&id, 1000.0).unwrap().value, 1.0);
    }

    #[test]
    fn singular_series_partials_stabilize() {
        // Nondegenerate shifted system: the tail decays like p^-2.
        let sys = LinearSystem::new(
            vec![vec![1, 0], vec![0, 1], vec![1, 1]],
            vec![0, 0, 1],
            abc_system().body.clone(),
        )
        .unwrap();
        let series = singular_series(&sys, 1000.0).unwrap();
        let at = |bound: u64| {
            series
                .partials
                .iter()
                .take_while(|&&(p, _)| p < bound)
                .last()
                .map(|&(_, v)| v)
                .unwrap()
        };
        assert!((at(1000) - at(500)).abs() <= 1e-3);
    }

    #[test]
    fn count_solutions_identity_form_counts_everything() {
        // r = 1, psi(n) = n1, y = N: every value is smooth, so the count is
        // the number of lattice points with n1 in [1, N].
        let n: u64 = 300;
        let sys = LinearSystem::new(
            vec![vec![1, 0]],
            vec![0],
            Body::Box {
                lo: vec![Rat::ZERO, Rat::ZERO],
                hi: vec![Rat::ONE, Rat::ONE],
            },
        )
        .unwrap();
        let w = SmoothWindow::new(1.0, n as f64).unwrap();
        let rep = count_solutions(&sys, n, &w, false).unwrap();
        // n1 in [1, N] (0 is skipped as out of range), n2 in [0, N].
        assert_eq!(rep.count, (n * (n + 1)) as f64);
        assert_eq!(rep.beta_product, 1.0);
        let ratio = rep.ratio.unwrap();
        assert!((ratio - 1.0).abs() < 0.01, "ratio = {ratio}");
    }

    #[test]
    fn count_solutions_relabeling_invariance() {
        // Swapping the two coordinates maps the simplex to itself.
        let n: u64 = 2_000;
        let w = SmoothWindow::new(1.0, 50.0).unwrap();
        let swapped = LinearSystem::new(
            vec![vec![0, 1], vec![1, 0], vec![1, 1]],
            vec![0, 0, 0],
            abc_system().body.clone(),
        )
        .unwrap();
        let a = count_solutions(&abc_system(), n, &w, false).unwrap();
        let b = count_solutions(&swapped, n, &w, false).unwrap();
        assert_eq!(a.count, b.count);
    }

    #[test]
    fn count_matches_abc_census() {
        // The lattice count over the simplex equals the ordered pair loop.
        let n: u64 = 3_000;
        let w = SmoothWindow::new(1.0, 55.0).unwrap();
        let lattice = count_solutions(&abc_system(), n, &w, false).unwrap();
        let census = abc_census(n, &w, false).unwrap();
        assert_eq!(lattice.count as u64, census.count);
    }

    #[test]
    fn weighted_count_tracks_unweighted_when_weight_is_flat() {
        // y = N makes every value smooth and the weight collapses to
        // 1/alpha(n, N), within a few percent of 1.
        let n: u64 = 2_000;
        let w = SmoothWindow::new(1.0, n as f64).unwrap();
        let sys = abc_system();
        let unweighted = count_solutions(&sys, n, &w, false).unwrap();
        let weighted = count_solutions(&sys, n, &w, true).unwrap();
        let ratio = weighted.count / unweighted.count;
        assert!(
            (ratio - 1.0).abs() <= 0.05,
            "weighted/unweighted = {ratio} strays from 1"
        );
    }

    #[test]
    fn abc_census_all_smooth_matches_combinatorics() {
        // y = N: ordered pairs with n1 + n2 <= N number (N-1)(N-2)/2 + ...
        let n: u64 = 3_000;
        let w = SmoothWindow::new(1.0, n as f64).unwrap();
        let rep = abc_census(n, &w, false).unwrap();
        let expect: u64 = (1..n).map(|n1| n - n1).sum();
        assert_eq!(rep.count, expect);
        assert!((rep.ratio - 1.0).abs() < 0.01, "ratio = {}", rep.ratio);
    }

    #[test]
    fn abc_census_parity_obstruction() {
        // Windows above 2 contain only odd numbers, so sums are never
        // members: the census is empty.
        let n: u64 = 10_000;
        let w = SmoothWindow::new(3.0, 100.0).unwrap();
        let rep = abc_census(n, &w, false).unwrap();
        assert_eq!(rep.count, 0);
    }

    #[test]
    fn abc_census_coprime_subset() {
        let n: u64 = 5_000;
        let w = SmoothWindow::new(1.0, 50.0).unwrap();
        let all = abc_census(n, &w, false).unwrap();
        let prim = abc_census(n, &w, true).unwrap();
        assert!(prim.count <= all.count);
        assert!(prim.count > 0);
    }

    #[test]
    fn descriptor_round_trip() {
        let text = "\
# A + B = C over the standard simplex
s 2
r 3
form 1 0
form 0 1
form 1 1
shifts 0 0 0
body simplex 0 0 1 0 0 1
n 30000
y 173
yprime 1
";
        let (sys, run) = parse_system_file(text).unwrap();
        assert_eq!((sys.s, sys.r, sys.l_max), (2, 3, 1));
        assert_eq!(run.n_scale, Some(30_000));
        assert_eq!(run.y_hi, Some(173.0));
        let echoed = sys.canonical_text();
        assert!(echoed.contains("form 1 1"));
        assert!(echoed.contains("body simplex"));
        // The canonical echo parses back to the same system.
        let (again, _) = parse_system_file(&echoed).unwrap();
        assert_eq!(again.forms, sys.forms);
        assert_eq!(again.shifts, sys.shifts);

        assert!(parse_system_file("s 2\nr 1\nform 1 0 0\nshifts 0\nbody box 0 1 0 1\n").is_err());
        assert!(parse_system_file("nonsense 4\n").is_err());
    }

    #[test]
    fn budgets_are_enforced() {
        let w = SmoothWindow::new(1.0, 50.0).unwrap();
        assert!(matches!(
            abc_census(200_000, &w, false),
            Err(Error::Capacity(_))
        ));
    }
}
