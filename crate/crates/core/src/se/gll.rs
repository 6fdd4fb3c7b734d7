//! One-dimensional nodal building blocks: Gauss-Lobatto-Legendre and Gauss
//! points, quadrature weights, and the differentiation and interpolation
//! matrices between them.

/// Legendre polynomial `P_n(x)` and its derivative.
pub fn legendre(n: usize, x: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    let dp = if (1.0 - x * x).abs() < 1e-300 {
        // P'_n(±1) = ±n(n+1)/2 (sign follows (±1)^(n+1))
        let s = if x > 0.0 || n % 2 == 1 { 1.0 } else { -1.0 };
        s * nf * (nf + 1.0) / 2.0
    } else {
        nf * (p0 - x * p1) / (1.0 - x * x)
    };
    (p1, dp)
}

fn newton(mut x: f64, f: impl Fn(f64) -> (f64, f64)) -> f64 {
    for _ in 0..100 {
        let (v, d) = f(x);
        let step = v / d;
        x -= step;
        if step.abs() < 1e-15 {
            break;
        }
    }
    x
}

/// Nodes and weights of a one-dimensional quadrature rule on `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Gauss-Lobatto-Legendre rule of polynomial order `n` (`n + 1` points),
/// exact for polynomials of degree `2n - 1`.
pub fn gll(n: usize) -> Rule {
    assert!(n >= 1, "GLL rule needs order >= 1");
    let mut nodes = vec![0.0; n + 1];
    nodes[0] = -1.0;
    nodes[n] = 1.0;
    // interior nodes are the roots of P_{n+1} - P_{n-1} = (2n+1) ∫P_n
    for (j, node) in nodes.iter_mut().enumerate().take(n).skip(1) {
        let guess = -(std::f64::consts::PI * j as f64 / n as f64).cos();
        *node = newton(guess, |x| {
            let (pn1, _) = legendre(n + 1, x);
            let (pm1, _) = legendre(n - 1, x);
            let (pn, _) = legendre(n, x);
            (pn1 - pm1, (2 * n + 1) as f64 * pn)
        });
    }
    let nn = (n * (n + 1)) as f64;
    let weights = nodes.iter().map(|&x| 2.0 / (nn * legendre(n, x).0.powi(2))).collect();
    Rule { nodes, weights }
}

/// Gauss-Legendre rule with `q` points, exact for degree `2q - 1`.
pub fn gauss(q: usize) -> Rule {
    assert!(q >= 1, "Gauss rule needs at least one point");
    let nodes: Vec<f64> = (0..q)
        .map(|j| {
            let guess = -(std::f64::consts::PI * (j as f64 + 0.75) / (q as f64 + 0.5)).cos();
            newton(guess, |x| legendre(q, x))
        })
        .collect();
    let weights = nodes
        .iter()
        .map(|&x| {
            let d = legendre(q, x).1;
            2.0 / ((1.0 - x * x) * d * d)
        })
        .collect();
    Rule { nodes, weights }
}

fn barycentric(x: &[f64]) -> Vec<f64> {
    (0..x.len())
        .map(|j| {
            let p: f64 = (0..x.len()).filter(|&k| k != j).map(|k| x[j] - x[k]).product();
            1.0 / p
        })
        .collect()
}

/// Dense row-major matrix of a one-dimensional operator.
#[derive(Debug, Clone, PartialEq)]
pub struct Op1d {
    pub rows: usize,
    pub cols: usize,
    pub a: Vec<f64>,
}

impl Op1d {
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.cols + j]
    }

    pub fn transpose(&self) -> Op1d {
        let mut a = vec![0.0; self.a.len()];
        for i in 0..self.rows {
            for j in 0..self.cols {
                a[j * self.rows + i] = self.at(i, j);
            }
        }
        Op1d {
            rows: self.cols,
            cols: self.rows,
            a,
        }
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self.at(i, j) * v[j]).sum())
            .collect()
    }
}

/// Collocation derivative matrix on the nodes `x`: `(D u)_i = u'(x_i)` for
/// every polynomial of degree below `x.len()`.
pub fn derivative_matrix(x: &[f64]) -> Op1d {
    let n = x.len();
    let w = barycentric(x);
    let mut a = vec![0.0; n * n];
    for i in 0..n {
        let mut diag = 0.0;
        for j in 0..n {
            if i != j {
                let d = (w[j] / w[i]) / (x[i] - x[j]);
                a[i * n + j] = d;
                diag -= d;
            }
        }
        a[i * n + i] = diag;
    }
    Op1d { rows: n, cols: n, a }
}

/// Lagrange interpolation from the nodes `x` to the points `y`
/// (`y.len() × x.len()`).
pub fn interpolation_matrix(x: &[f64], y: &[f64]) -> Op1d {
    let w = barycentric(x);
    let (m, n) = (y.len(), x.len());
    let mut a = vec![0.0; m * n];
    for (i, &yi) in y.iter().enumerate() {
        let row = &mut a[i * n..(i + 1) * n];
        if let Some(hit) = x.iter().position(|&xj| (yi - xj).abs() < 1e-14) {
            row[hit] = 1.0;
            continue;
        }
        let terms: Vec<f64> = (0..n).map(|j| w[j] / (yi - x[j])).collect();
        let total: f64 = terms.iter().sum();
        for j in 0..n {
            row[j] = terms[j] / total;
        }
    }
    Op1d { rows: m, cols: n, a }
}
