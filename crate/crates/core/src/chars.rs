//! Dirichlet characters to small moduli, built from the cyclic decomposition
//! of the unit group, plus the twisted counting function `Psi(x,[y',y];chi)`.

use crate::error::{Error, Result};
use crate::exec::ExecMode;
use crate::sieve::{fold_segments, SieveConfig, SmoothWindow};
use num_complex::Complex64;

const MAX_CHAR_MODULUS: u64 = 1 << 20;

/// A Dirichlet character mod `q`, tabulated on residues.
#[derive(Clone, Debug)]
pub struct DirichletCharacter {
    modulus: u64,
    values: Vec<Complex64>,
    principal: bool,
}

impl DirichletCharacter {
    /// The principal character mod `q`.
    pub fn principal(q: u64) -> Result<Self> {
        check_modulus(q)?;
        let values = (0..q)
            .map(|n| {
                if gcd(n, q) == 1 {
                    Complex64::new(1.0, 0.0)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            })
            .collect();
        Ok(DirichletCharacter {
            modulus: q,
            values,
            principal: true,
        })
    }

    /// The Legendre symbol mod an odd prime `p`.
    pub fn legendre(p: u64) -> Result<Self> {
        if p < 3 || p % 2 == 0 || !is_prime(p) {
            return Err(Error::domain(format!("legendre symbol needs an odd prime, got {p}")));
        }
        let mut values = vec![Complex64::new(0.0, 0.0); p as usize];
        for n in 1..p {
            // Euler's criterion.
            let r = pow_mod(n, (p - 1) / 2, p);
            values[n as usize] = if r == 1 {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(-1.0, 0.0)
            };
        }
        Ok(DirichletCharacter {
            modulus: p,
            values,
            principal: false,
        })
    }

    /// All `phi(q)` characters mod `q`, the principal one first.
    pub fn group(q: u64) -> Result<Vec<Self>> {
        check_modulus(q)?;
        let components = unit_group_components(q);
        let orders: Vec<u64> = components
            .iter()
            .flat_map(|c| c.gens.iter().map(|&(_, ord)| ord))
            .collect();
        // Exponent vectors of every reduced residue, concatenated across the
        // CRT components of the unit group.
        let mut dlogs: Vec<Option<Vec<u64>>> = vec![None; q as usize];
        for residue in 0..q {
            if gcd(residue, q) == 1 {
                let mut exps = Vec::with_capacity(orders.len());
                for c in &components {
                    exps.extend(c.dlog[(residue % c.pe) as usize].as_ref().expect("reduced residue"));
                }
                dlogs[residue as usize] = Some(exps);
            }
        }
        let mut exps = vec![0u64; orders.len()];
        let mut out = Vec::new();
        loop {
            let mut values = vec![Complex64::new(0.0, 0.0); q as usize];
            for residue in 0..q {
                if let Some(ds) = &dlogs[residue as usize] {
                    let mut phase = 0.0f64;
                    for ((&k, &d), &ord) in exps.iter().zip(ds).zip(&orders) {
                        phase += (k * d % ord) as f64 / ord as f64;
                    }
                    let arg = 2.0 * std::f64::consts::PI * phase.fract();
                    values[residue as usize] = Complex64::new(arg.cos(), arg.sin());
                }
            }
            out.push(DirichletCharacter {
                modulus: q,
                values,
                principal: exps.iter().all(|&k| k == 0),
            });
            // Odometer over exponent tuples.
            let mut i = 0;
            loop {
                if i == exps.len() {
                    return Ok(out);
                }
                exps[i] += 1;
                if exps[i] < orders[i] {
                    break;
                }
                exps[i] = 0;
                i += 1;
            }
        }
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn is_principal(&self) -> bool {
        self.principal
    }

    #[inline]
    pub fn eval(&self, n: u64) -> Complex64 {
        self.values[(n % self.modulus) as usize]
    }
}

fn check_modulus(q: u64) -> Result<()> {
    if q == 0 {
        return Err(Error::domain("character modulus must be >= 1"));
    }
    if q > MAX_CHAR_MODULUS {
        return Err(Error::capacity(format!(
            "character modulus {q} exceeds the tabulation limit {MAX_CHAR_MODULUS}"
        )));
    }
    Ok(())
}

/// One CRT component `(Z/p^e)^*` of the unit group: its generators with
/// orders, plus a full exponent-vector table for its reduced residues.
struct UnitComponent {
    pe: u64,
    gens: Vec<(u64, u64)>,
    dlog: Vec<Option<Vec<u64>>>,
}

/// Decomposes `(Z/q)^*` into cyclic components: odd prime powers are cyclic;
/// `2^e` splits as `<-1> x <5>` for `e >= 3`.
fn unit_group_components(q: u64) -> Vec<UnitComponent> {
    if q == 1 {
        return Vec::new();
    }
    factorize_small(q)
        .into_iter()
        .map(|(p, e)| unit_component(p, e))
        .collect()
}

fn unit_component(p: u64, e: u32) -> UnitComponent {
    let pe = p.pow(e);
    let gens: Vec<(u64, u64)> = if p == 2 {
        match e {
            1 => Vec::new(),
            2 => vec![(3, 2)],
            _ => vec![(pe - 1, 2), (5, pe / 4)],
        }
    } else {
        let phi = pe / p * (p - 1);
        vec![(primitive_root(p, e), phi)]
    };
    // Walk every exponent tuple once to tabulate discrete logs.
    let mut dlog: Vec<Option<Vec<u64>>> = vec![None; pe as usize];
    let mut exps = vec![0u64; gens.len()];
    'tuples: loop {
        let mut residue: u64 = 1;
        for (&(g, _), &k) in gens.iter().zip(&exps) {
            residue = residue * pow_mod(g, k, pe) % pe;
        }
        dlog[residue as usize] = Some(exps.clone());
        let mut i = 0;
        loop {
            if i == exps.len() {
                break 'tuples;
            }
            exps[i] += 1;
            if exps[i] < gens[i].1 {
                break;
            }
            exps[i] = 0;
            i += 1;
        }
    }
    UnitComponent { pe, gens, dlog }
}

fn primitive_root(p: u64, e: u32) -> u64 {
    let phi_p = p - 1;
    let factors = factorize_small(phi_p);
    let mut g = 2u64;
    loop {
        let ok = factors.iter().all(|&(f, _)| pow_mod(g, phi_p / f, p) != 1);
        if ok {
            break;
        }
        g += 1;
    }
    if e == 1 {
        return g;
    }
    // Ensure g generates mod p^2 (then mod all higher powers).
    let p2 = p * p;
    if pow_mod(g, phi_p, p2) == 1 {
        g += p;
    }
    g % p.pow(e)
}

fn factorize_small(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut d = 2u64;
    while d * d <= n {
        if n % d == 0 {
            let mut e = 0;
            while n % d == 0 {
                n /= d;
                e += 1;
            }
            out.push((d, e));
        }
        d += 1;
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u64;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

pub fn pow_mod(base: u64, mut exp: u64, m: u64) -> u64 {
    if m == 1 {
        return 0;
    }
    let mut acc: u128 = 1;
    let mm = m as u128;
    let mut b = (base % m) as u128;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = acc * b % mm;
        }
        b = b * b % mm;
        exp >>= 1;
    }
    acc as u64
}

pub fn euler_phi(n: u64) -> u64 {
    factorize_small(n)
        .into_iter()
        .fold(n, |acc, (p, _)| acc / p * (p - 1))
}

/// Twisted count `sum over smooth n <= x of chi(n)`.
///
/// Accumulation is sequential in ascending n so that runs are bit-for-bit
/// reproducible; the sieve segments still stream.
pub fn psi_character(x: u64, w: &SmoothWindow, chi: &DirichletCharacter) -> Complex64 {
    psi_character_with(&SieveConfig::default(), ExecMode::default(), x, w, chi)
}

pub fn psi_character_with(
    cfg: &SieveConfig,
    mode: ExecMode,
    x: u64,
    w: &SmoothWindow,
    chi: &DirichletCharacter,
) -> Complex64 {
    assert!(x <= crate::sieve::MAX_X, "x = {x} exceeds the 2^63 - 1 budget");
    if x == 0 {
        return Complex64::new(0.0, 0.0);
    }
    // Per-segment ordered member lists keep the final accumulation order
    // independent of the execution mode.
    let members = fold_segments(1, x + 1, cfg, mode, |_, table| {
        let mut residues: Vec<u64> = Vec::new();
        for n in table.range_lo()..table.range_hi() {
            if table.is_member(n, w) {
                residues.push(n % chi.modulus());
            }
        }
        residues
    })
    .expect("x + 1 fits the sieve budget checked by the caller");
    let mut sum = Complex64::new(0.0, 0.0);
    for seg in members {
        for r in seg {
            sum += chi.eval(r);
        }
    }
    sum
}
