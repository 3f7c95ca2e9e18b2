//! Shared statistical helpers: normal distribution functions, quadrature
//! against Gaussian weights, normality and trend tests, and moment summaries.

/// Standard normal density.
pub fn normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (std::f64::consts::TAU).sqrt()
}

/// Standard normal CDF via the complementary error function.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

/// Complementary error function, Cody's rational approximations
/// (relative error around 1e-16 on the real line).
pub fn erfc(x: f64) -> f64 {
    let y = x.abs();
    if y <= 0.46875 {
        return 1.0 - erf_central(x);
    }
    let r = if y <= 4.0 {
        const C: [f64; 9] = [
            5.64188496988670089e-1,
            8.88314979438837594e0,
            6.61191906371416295e1,
            2.98635138197400131e2,
            8.81952221241769090e2,
            1.71204761263407058e3,
            2.05107837782607147e3,
            1.23033935479799725e3,
            2.15311535474403846e-8,
        ];
        const D: [f64; 8] = [
            1.57449261107098347e1,
            1.17693950891312499e2,
            5.37181101862009858e2,
            1.62138957456669019e3,
            3.29079923573345963e3,
            4.36261909014324716e3,
            3.43936767414372164e3,
            1.23033935480374942e3,
        ];
        let mut num = C[8] * y;
        let mut den = y;
        for i in 0..7 {
            num = (num + C[i]) * y;
            den = (den + D[i]) * y;
        }
        scaled_exp(y) * (num + C[7]) / (den + D[7])
    } else {
        const P: [f64; 6] = [
            3.05326634961232344e-1,
            3.60344899949804439e-1,
            1.25781726111229246e-1,
            1.60837851487422766e-2,
            6.58749161529837803e-4,
            1.63153871373020978e-2,
        ];
        const Q: [f64; 5] = [
            2.56852019228982242e0,
            1.87295284992346047e0,
            5.27905102951428412e-1,
            6.05183413124413191e-2,
            2.33520497626869185e-3,
        ];
        const SQRPI: f64 = 5.641_895_835_477_563e-1;
        let ysq = 1.0 / (y * y);
        let mut num = P[5] * ysq;
        let mut den = ysq;
        for i in 0..4 {
            num = (num + P[i]) * ysq;
            den = (den + Q[i]) * ysq;
        }
        let tail = ysq * (num + P[4]) / (den + Q[4]);
        scaled_exp(y) * (SQRPI - tail) / y
    };
    if x >= 0.0 {
        r
    } else {
        2.0 - r
    }
}

/// `exp(-y^2)` split so the squared argument loses no low bits.
fn scaled_exp(y: f64) -> f64 {
    let ysq = (y * 16.0).trunc() / 16.0;
    let del = (y - ysq) * (y + ysq);
    (-ysq * ysq).exp() * (-del).exp()
}

fn erf_central(x: f64) -> f64 {
    const A: [f64; 5] = [
        3.16112374387056560e0,
        1.13864154151050156e2,
        3.77485237685302021e2,
        3.20937758913846947e3,
        1.85777706184603153e-1,
    ];
    const B: [f64; 4] = [
        2.36012909523441209e1,
        2.44024637934444173e2,
        1.28261652607737228e3,
        2.84423683343917062e3,
    ];
    let ysq = x * x;
    let mut num = A[4] * ysq;
    let mut den = ysq;
    for i in 0..3 {
        num = (num + A[i]) * ysq;
        den = (den + B[i]) * ysq;
    }
    x * (num + A[3]) / (den + B[3])
}

/// Integral of `f` against the standard normal density, composite Simpson on
/// `[-12, 12]` with `2 * half_panels` panels.
pub fn gauss_expectation<F: Fn(f64) -> f64>(f: F, half_panels: usize) -> f64 {
    let n = 2 * half_panels;
    let (a, b) = (-12.0, 12.0);
    let h = (b - a) / n as f64;
    let g = |z: f64| f(z) * normal_pdf(z);
    let mut sum = g(a) + g(b);
    for i in 1..n {
        let z = a + i as f64 * h;
        sum += if i % 2 == 1 { 4.0 * g(z) } else { 2.0 * g(z) };
    }
    sum * h / 3.0
}

/// Sample mean.
pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

/// Standard error of the sample mean.
pub fn stderr_of_mean(xs: &[f64]) -> f64 {
    (variance(xs) / xs.len() as f64).sqrt()
}

/// Standard error of the unbiased sample variance under approximate normality.
pub fn stderr_of_variance(xs: &[f64]) -> f64 {
    variance(xs) * (2.0 / (xs.len() as f64 - 1.0)).sqrt()
}

/// Anderson-Darling normality statistic with estimated mean and variance,
/// with Stephens' small-sample correction. The null is rejected at the 1%
/// level when the corrected statistic exceeds 1.035.
pub struct AndersonDarling {
    pub a2_corrected: f64,
    pub passes_at_1pct: bool,
}

pub fn anderson_darling_normal(data: &[f64]) -> AndersonDarling {
    let n = data.len();
    assert!(n >= 8, "too few samples for a normality test");
    let mut xs = data.to_vec();
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let m = mean(&xs);
    let sd = variance(&xs).sqrt();
    let nf = n as f64;
    let mut a2 = -nf;
    for i in 0..n {
        let z = (xs[i] - m) / sd;
        let zr = (xs[n - 1 - i] - m) / sd;
        let cdf = normal_cdf(z).clamp(1e-300, 1.0 - 1e-16);
        let sf = (1.0 - normal_cdf(zr)).clamp(1e-300, 1.0 - 1e-16);
        a2 -= (2.0 * i as f64 + 1.0) / nf * (cdf.ln() + sf.ln());
    }
    let a2_corrected = a2 * (1.0 + 0.75 / nf + 2.25 / (nf * nf));
    AndersonDarling { a2_corrected, passes_at_1pct: a2_corrected < 1.035 }
}

/// Exact one-sided Mann-Kendall p-value for a decreasing trend, computed by
/// enumerating permutations; usable for short ladders (n <= 8).
pub fn mann_kendall_decreasing_p(values: &[f64]) -> f64 {
    let n = values.len();
    assert!((2..=8).contains(&n), "exact trend test expects 2..=8 points");
    let s_obs = kendall_s(values);
    let mut idx: Vec<usize> = (0..n).collect();
    let mut le_count = 0usize;
    let mut total = 0usize;
    permute(&mut idx, 0, &mut |perm| {
        let permuted: Vec<f64> = perm.iter().map(|&i| values[i]).collect();
        if kendall_s(&permuted) <= s_obs {
            le_count += 1;
        }
        total += 1;
    });
    le_count as f64 / total as f64
}

fn kendall_s(values: &[f64]) -> i64 {
    let mut s = 0i64;
    for i in 0..values.len() {
        for j in i + 1..values.len() {
            s += match values[j].partial_cmp(&values[i]).unwrap() {
                std::cmp::Ordering::Greater => 1,
                std::cmp::Ordering::Less => -1,
                std::cmp::Ordering::Equal => 0,
            };
        }
    }
    s
}

fn permute<F: FnMut(&[usize])>(idx: &mut Vec<usize>, k: usize, visit: &mut F) {
    if k == idx.len() {
        visit(idx);
        return;
    }
    for i in k..idx.len() {
        idx.swap(k, i);
        permute(idx, k + 1, visit);
        idx.swap(k, i);
    }
}
