//! Class groups of complex cubic fields `Q(theta)`, `theta^3 + a theta^2 + b theta + c = 0`,
//! with squarefree discriminant (so `Z[theta]` is maximal), by enumerating
//! ideal classes generated by primes below the Minkowski bound.
//!
//! Ideals are HNF lattices in the basis `1, theta, theta^2`.  An ideal `I`
//! is principal iff it holds an element of norm `N(I)`; after balancing by
//! a unit `eta`, such a generator has `T2 <= N^(2/3) (eta + 2 sqrt(eta))`, so
//! a Fincke–Pohst search to that radius is conclusive.

type V3 = [i128; 3];

#[derive(Clone, Debug)]
pub struct Field {
    pub a: i128,
    pub b: i128,
    pub c: i128,
    pub disc: i128,
    real: f64,
    cre: f64,
    cim: f64,
    /// `|sigma_1(eta)| > 1` for some unit `eta`.
    eta: f64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Ideal {
    /// Lower-triangular HNF rows.
    pub basis: [V3; 3],
}

impl Ideal {
    pub fn norm(&self) -> i128 {
        self.basis[0][0] * self.basis[1][1] * self.basis[2][2]
    }
}

pub fn cubic_disc(a: i128, b: i128, c: i128) -> i128 {
    -4 * a * a * a * c + a * a * b * b + 18 * a * b * c - 4 * b * b * b - 27 * c * c
}

fn squarefree(mut n: i128) -> bool {
    n = n.abs();
    let mut p = 2;
    while p * p <= n {
        if n % (p * p) == 0 {
            return false;
        }
        if n % p == 0 {
            n /= p;
        }
        p += 1;
    }
    true
}

impl Field {
    /// `None` unless the discriminant is negative and squarefree and a unit
    /// is found.
    pub fn new(a: i128, b: i128, c: i128) -> Option<Field> {
        let disc = cubic_disc(a, b, c);
        if disc >= 0 || !squarefree(disc) {
            return None;
        }
        let f = |x: f64| ((x + a as f64) * x + b as f64) * x + c as f64;
        let df = |x: f64| (3.0 * x + 2.0 * a as f64) * x + b as f64;
        // real root by bisection then Newton
        let mut lo = -1e6;
        let mut hi = 1e6;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let mut r = 0.5 * (lo + hi);
        for _ in 0..5 {
            let d = df(r);
            if d != 0.0 {
                r -= f(r) / d;
            }
        }
        // x^2 + (a + r) x + (b + r(a + r)) is the other factor
        let p1 = a as f64 + r;
        let p0 = b as f64 + r * p1;
        let cre = -p1 / 2.0;
        let cim = (p0 - p1 * p1 / 4.0).max(0.0).sqrt();
        let mut k = Field { a, b, c, disc, real: r, cre, cim, eta: 0.0 };
        k.eta = k.find_unit()?;
        Some(k)
    }

    pub fn minkowski(&self) -> f64 {
        (4.0 / std::f64::consts::PI) * (6.0 / 27.0) * (self.disc.abs() as f64).sqrt()
    }

    pub fn mul(&self, u: &V3, v: &V3) -> V3 {
        let mut w = [0i128; 5];
        for i in 0..3 {
            for j in 0..3 {
                w[i + j] += u[i] * v[j];
            }
        }
        // theta^3 = -a theta^2 - b theta - c
        for k in (3..5).rev() {
            let t = w[k];
            w[k] = 0;
            w[k - 1] -= self.a * t;
            w[k - 2] -= self.b * t;
            w[k - 3] -= self.c * t;
        }
        [w[0], w[1], w[2]]
    }

    /// Exact norm as the determinant of multiplication by `x`.
    pub fn norm(&self, x: &V3) -> i128 {
        let c0 = *x;
        let c1 = self.mul(x, &[0, 1, 0]);
        let c2 = self.mul(x, &[0, 0, 1]);
        let m = [c0, c1, c2];
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    /// Coordinates with `T2(x) = |v|^2`.
    fn embed(&self, x: &[f64; 3]) -> [f64; 3] {
        let s1 = x[0] + x[1] * self.real + x[2] * self.real * self.real;
        let (zr, zi) = (self.cre, self.cim);
        let (z2r, z2i) = (zr * zr - zi * zi, 2.0 * zr * zi);
        let re = x[0] + x[1] * zr + x[2] * z2r;
        let im = x[1] * zi + x[2] * z2i;
        let s2 = std::f64::consts::SQRT_2;
        [s1, s2 * re, s2 * im]
    }

    fn sigma1(&self, x: &V3) -> f64 {
        let r = self.real;
        x[0] as f64 + x[1] as f64 * r + x[2] as f64 * r * r
    }

    /// Lattice vectors `x` of `basis` with `T2(x) <= bound`, excluding 0.
    fn short_vectors(&self, basis: &[V3; 3], bound: f64, mut visit: impl FnMut(&V3) -> bool) -> bool {
        // LLL-reduce in the embedding
        let mut b: Vec<V3> = basis.to_vec();
        let emb = |v: &V3| self.embed(&[v[0] as f64, v[1] as f64, v[2] as f64]);
        let dot = |x: &[f64; 3], y: &[f64; 3]| x[0] * y[0] + x[1] * y[1] + x[2] * y[2];
        let mut k = 1;
        let mut guard = 0;
        while k < 3 && guard < 10_000 {
            guard += 1;
            let e: Vec<[f64; 3]> = b.iter().map(emb).collect();
            // Gram–Schmidt
            let mut gs = e.clone();
            let mut mu = [[0.0f64; 3]; 3];
            for i in 0..3 {
                for j in 0..i {
                    mu[i][j] = dot(&e[i], &gs[j]) / dot(&gs[j], &gs[j]);
                    for t in 0..3 {
                        gs[i][t] -= mu[i][j] * gs[j][t];
                    }
                }
            }
            for j in (0..k).rev() {
                let q = mu[k][j].round();
                if q != 0.0 {
                    let qi = q as i128;
                    for t in 0..3 {
                        b[k][t] -= qi * b[j][t];
                    }
                    // Gram–Schmidt vectors are unchanged; refresh row k of mu
                    let e2: Vec<[f64; 3]> = b.iter().map(emb).collect();
                    for jj in 0..k {
                        mu[k][jj] = dot(&e2[k], &gs[jj]) / dot(&gs[jj], &gs[jj]);
                    }
                }
            }
            let lhs = dot(&gs[k], &gs[k]);
            let rhs = (0.75 - mu[k][k - 1] * mu[k][k - 1]) * dot(&gs[k - 1], &gs[k - 1]);
            if lhs >= rhs {
                k += 1;
            } else {
                b.swap(k, k - 1);
                k = k.max(2) - 1;
            }
        }
        // Cholesky of the Gram matrix of the reduced basis
        let e: Vec<[f64; 3]> = b.iter().map(emb).collect();
        let mut g = [[0.0f64; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                g[i][j] = dot(&e[i], &e[j]);
            }
        }
        // q_ii, q_ij as in Fincke–Pohst
        let mut q = g;
        for i in 0..3 {
            for j in (i + 1)..3 {
                q[j][i] = q[i][j];
                q[i][j] /= q[i][i];
            }
            for kk in (i + 1)..3 {
                for l in kk..3 {
                    q[kk][l] -= q[kk][i] * q[i][l];
                }
            }
        }
        let bound = bound * (1.0 + 1e-9) + 1e-9;
        let qd = [q[0][0], q[1][1], q[2][2]];
        let r2 = ((bound / qd[2]).sqrt() + 1e-9).floor() as i64;
        for x2 in -r2..=r2 {
            let t2 = qd[2] * (x2 as f64).powi(2);
            if t2 > bound {
                continue;
            }
            let c1 = -q[1][2] * x2 as f64;
            let w1 = ((bound - t2) / qd[1]).max(0.0).sqrt();
            for x1 in (c1 - w1).ceil() as i64..=(c1 + w1).floor() as i64 {
                let t1 = t2 + qd[1] * (x1 as f64 - c1).powi(2);
                if t1 > bound {
                    continue;
                }
                let c0 = -q[0][1] * x1 as f64 - q[0][2] * x2 as f64;
                let w0 = ((bound - t1) / qd[0]).max(0.0).sqrt();
                for x0 in (c0 - w0).ceil() as i64..=(c0 + w0).floor() as i64 {
                    if x0 == 0 && x1 == 0 && x2 == 0 {
                        continue;
                    }
                    let (x0, x1, x2) = (x0 as i128, x1 as i128, x2 as i128);
                    let v = [
                        x0 * b[0][0] + x1 * b[1][0] + x2 * b[2][0],
                        x0 * b[0][1] + x1 * b[1][1] + x2 * b[2][1],
                        x0 * b[0][2] + x1 * b[1][2] + x2 * b[2][2],
                    ];
                    if visit(&v) {
                        return true;
                    }
                }
            }
        }
        false
    }

    /// `None` when no unit turns up below `T2 = 2^16`; the principal-ideal
    /// search would be too slow for such a regulator anyway.
    fn find_unit(&self) -> Option<f64> {
        let id = [[1, 0, 0], [0, 1, 0], [0, 0, 1]];
        let mut bound = 8.0;
        while bound <= 65536.0 {
            let mut best = f64::INFINITY;
            self.short_vectors(&id, bound, |v| {
                if self.norm(v).abs() == 1 {
                    let s = self.sigma1(v).abs();
                    let s = if s < 1.0 { 1.0 / s } else { s };
                    if s > 1.0 + 1e-9 && s < best {
                        best = s;
                    }
                }
                false
            });
            if best.is_finite() {
                return Some(best);
            }
            bound *= 2.0;
        }
        None
    }

    /// HNF of the lattice spanned by `gens` and `modulus * Z^3`.
    pub fn hnf(&self, gens: &[V3], modulus: i128) -> Ideal {
        let m = modulus;
        let mut rows: Vec<V3> = gens.iter().map(|g| g.map(|x| x.rem_euclid(m))).collect();
        for i in 0..3 {
            let mut v = [0; 3];
            v[i] = m;
            rows.push(v);
        }
        let mut out = [[0i128; 3]; 3];
        for col in (0..3).rev() {
            loop {
                let nz: Vec<usize> = (0..rows.len()).filter(|&i| rows[i][col] != 0).collect();
                if nz.len() <= 1 {
                    break;
                }
                let piv = *nz.iter().min_by_key(|&&i| rows[i][col].abs()).unwrap();
                let pr = rows[piv];
                for &i in &nz {
                    if i != piv {
                        let q = rows[i][col] / pr[col];
                        for t in 0..3 {
                            rows[i][t] -= q * pr[t];
                        }
                        for t in 0..col {
                            rows[i][t] = rows[i][t].rem_euclid(m);
                        }
                    }
                }
            }
            let piv = (0..rows.len()).find(|&i| rows[i][col] != 0).expect("full rank");
            let mut p = rows.remove(piv);
            if p[col] < 0 {
                p = p.map(|x| -x);
            }
            out[col] = p;
        }
        for i in 0..3 {
            for j in (i + 1)..3 {
                let q = out[j][i].div_euclid(out[i][i]);
                let r = out[i];
                for t in 0..3 {
                    out[j][t] -= q * r[t];
                }
            }
        }
        Ideal { basis: out }
    }

    pub fn unit_ideal(&self) -> Ideal {
        Ideal { basis: [[1, 0, 0], [0, 1, 0], [0, 0, 1]] }
    }

    pub fn ideal_mul(&self, x: &Ideal, y: &Ideal) -> Ideal {
        let mut gens = Vec::with_capacity(9);
        for u in &x.basis {
            for v in &y.basis {
                gens.push(self.mul(u, v));
            }
        }
        self.hnf(&gens, x.norm() * y.norm())
    }

    pub fn is_principal(&self, i: &Ideal) -> bool {
        let n = i.norm();
        if n == 1 {
            return true;
        }
        let bound = (n as f64).powf(2.0 / 3.0) * (self.eta + 2.0 * self.eta.sqrt());
        self.short_vectors(&i.basis, bound, |v| self.norm(v).abs() == n)
    }

    /// Primes above `p` as `(ideal, e, f)`.
    pub fn primes_above(&self, p: i128) -> Vec<(Ideal, u32, u32)> {
        let fm = |x: i128| (((x + self.a) * x + self.b) * x + self.c).rem_euclid(p);
        let mut roots: Vec<(i128, u32)> = Vec::new();
        // multiplicities by repeated synthetic division
        let mut poly = vec![self.c.rem_euclid(p), self.b.rem_euclid(p), self.a.rem_euclid(p), 1];
        for r in 0..p {
            if fm(r) != 0 {
                continue;
            }
            let mut m = 0;
            loop {
                let n = poly.len() - 1;
                let mut q = vec![0i128; n];
                let mut acc = 0i128;
                for k in (0..=n).rev() {
                    acc = (acc * r + poly[k]).rem_euclid(p);
                    if k > 0 {
                        q[k - 1] = acc;
                    }
                }
                if acc != 0 || n == 0 {
                    break;
                }
                poly = q;
                m += 1;
            }
            roots.push((r, m));
        }
        let mut out = Vec::new();
        let pid = |g: V3| -> Ideal {
            let gens = vec![g, self.mul(&g, &[0, 1, 0]), self.mul(&g, &[0, 0, 1]), [p, 0, 0], [0, p, 0], [0, 0, p]];
            self.hnf(&gens, p * p * p)
        };
        for &(r, m) in &roots {
            out.push((pid([-r, 1, 0]), m, 1));
        }
        let used: u32 = roots.iter().map(|r| r.1).sum();
        if used == 1 {
            // the leftover quadratic factor, monic: poly = [q0, q1, 1]
            out.push((pid([poly[0], poly[1], 1]), 1, 2));
        } else if used == 0 {
            out.push((self.hnf(&[[p, 0, 0]], p), 1, 3));
        }
        out
    }
}

/// Result of the enumeration.
#[derive(Clone, Debug)]
pub struct ClassGroup {
    pub order: usize,
    pub two_rank: usize,
}

fn primes_upto(n: i128) -> Vec<i128> {
    (2..=n).filter(|&p| (2..p).take_while(|d| d * d <= p).all(|d| p % d != 0)).collect()
}

fn rank_mod2(rows: &[Vec<i64>], n: usize) -> usize {
    let mut m: Vec<Vec<u8>> = rows.iter().map(|r| r.iter().map(|&x| x.rem_euclid(2) as u8).collect()).collect();
    let mut rank = 0;
    for c in 0..n {
        let Some(p) = (rank..m.len()).find(|&i| m[i][c] == 1) else { continue };
        m.swap(rank, p);
        for i in 0..m.len() {
            if i != rank && m[i][c] == 1 {
                for t in 0..n {
                    m[i][t] ^= m[rank][t];
                }
            }
        }
        rank += 1;
    }
    rank
}

pub fn class_group(k: &Field) -> ClassGroup {
    // generators: every prime of norm up to the Minkowski bound
    let mink = k.minkowski();
    let mut gens: Vec<Ideal> = Vec::new();
    let mut inverses: Vec<Ideal> = Vec::new();
    let mut base_rel: Vec<Vec<i64>> = Vec::new();
    for p in primes_upto(mink.floor() as i128) {
        let above = k.primes_above(p);
        let start = gens.len();
        let mut rel = Vec::new();
        for (j, (q, e, f)) in above.iter().enumerate() {
            if (p as f64).powi(*f as i32) > mink {
                continue;
            }
            // complement: p q^{-1}
            let mut comp = k.unit_ideal();
            for (jj, (q2, e2, _)) in above.iter().enumerate() {
                let mult = if jj == j { e2 - 1 } else { *e2 };
                for _ in 0..mult {
                    comp = k.ideal_mul(&comp, q2);
                }
            }
            gens.push(q.clone());
            inverses.push(comp);
            rel.push((gens.len() - 1, *e));
        }
        if gens.len() > start && rel.len() == above.len() {
            base_rel.push(rel.iter().map(|&(i, e)| (i, e as i64)).fold(Vec::new(), |mut v, (i, e)| {
                v.resize(i + 1, 0);
                v[i] = e;
                v
            }));
        }
    }
    let n = gens.len();
    for r in base_rel.iter_mut() {
        r.resize(n, 0);
    }
    // breadth-first search over classes
    struct Rep {
        ideal: Ideal,
        inverse: Ideal,
        v: Vec<i64>,
    }
    let mut reps = vec![Rep { ideal: k.unit_ideal(), inverse: k.unit_ideal(), v: vec![0; n] }];
    let mut relations: Vec<Vec<i64>> = base_rel;
    let mut head = 0;
    while head < reps.len() {
        for g in 0..n {
            let prod = k.ideal_mul(&reps[head].ideal, &gens[g]);
            let mut v = reps[head].v.clone();
            v[g] += 1;
            let mut found = None;
            for (s, rep) in reps.iter().enumerate() {
                if k.is_principal(&k.ideal_mul(&prod, &rep.inverse)) {
                    found = Some(s);
                    break;
                }
            }
            match found {
                Some(s) => {
                    let rel: Vec<i64> = v.iter().zip(&reps[s].v).map(|(x, y)| x - y).collect();
                    if rel.iter().any(|&x| x != 0) {
                        relations.push(rel);
                    }
                }
                None => {
                    let inverse = k.ideal_mul(&reps[head].inverse, &inverses[g]);
                    reps.push(Rep { ideal: prod, inverse, v });
                }
            }
        }
        head += 1;
    }
    let two_rank = n - rank_mod2(&relations, n);
    ClassGroup { order: reps.len(), two_rank }
}
