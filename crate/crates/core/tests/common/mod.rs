//! Test-side reference implementations, written independently of the library.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};

/// Straight-loop evaluation of every goodness-of-fit metric by its
/// definition. `None` marks an undefined value.
pub fn metric_oracle(obs: &[f64], sim: &[f64], n_pred: usize) -> Vec<(&'static str, Option<f64>)> {
    let n = obs.len();
    let nf = n as f64;
    let mut so = 0.0;
    let mut ss = 0.0;
    for i in 0..n {
        so += obs[i];
        ss += sim[i];
    }
    let mo = so / nf;
    let ms = ss / nf;

    let mut sum_d = 0.0;
    let mut sum_abs = 0.0;
    let mut sum_sq = 0.0;
    let mut sst = 0.0;
    let mut sat = 0.0;
    let mut vs = 0.0;
    let mut cov = 0.0;
    for i in 0..n {
        let e = sim[i] - obs[i];
        sum_d += e;
        sum_abs += e.abs();
        sum_sq += e * e;
        sst += (obs[i] - mo) * (obs[i] - mo);
        sat += (obs[i] - mo).abs();
        vs += (sim[i] - ms) * (sim[i] - ms);
        cov += (obs[i] - mo) * (sim[i] - ms);
    }
    let sd_o = (sst / (nf - 1.0)).sqrt();
    let sd_s = (vs / (nf - 1.0)).sqrt();
    let me = sum_d / nf;
    let mse = sum_sq / nf;
    let rmse = mse.sqrt();
    let def = |ok: bool, v: f64| if ok && v.is_finite() { Some(v) } else { None };

    let nse = def(sst > 0.0, 1.0 - sum_sq / sst);
    let r = def(sst > 0.0 && vs > 0.0, cov / (sst.sqrt() * vs.sqrt()));

    let zero_obs = obs.iter().any(|o| *o == 0.0);
    let (mut rn, mut rdn, mut wn, mut wd, mut p2, mut p1, mut rdd) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
    for i in 0..n {
        let (o, s) = (obs[i], sim[i]);
        if !zero_obs && mo != 0.0 {
            rn += ((s - o) / o).powi(2);
            rdn += ((o - mo) / mo).powi(2);
            rdd += (((s - mo).abs() + (o - mo).abs()) / mo).powi(2);
        }
        wn += o * (s - o).powi(2);
        wd += o * (o - mo).powi(2);
        let pe = (s - mo).abs() + (o - mo).abs();
        p2 += pe * pe;
        p1 += pe;
    }
    let relative_ok = !zero_obs && mo != 0.0;
    let rnse = def(relative_ok && rdn > 0.0, 1.0 - rn / rdn);
    let rd = def(relative_ok && rdd > 0.0, 1.0 - rn / rdd);
    let wnse = def(wd != 0.0, 1.0 - wn / wd);
    let d = def(p2 > 0.0, 1.0 - sum_sq / p2);
    let md = def(p1 > 0.0, 1.0 - sum_abs / p1);
    let dr = if sum_abs == 0.0 && sat == 0.0 {
        None
    } else if sum_abs <= 2.0 * sat {
        Some(1.0 - sum_abs / (2.0 * sat))
    } else {
        Some(2.0 * sat / sum_abs - 1.0)
    };
    let cp = if n < 3 {
        None
    } else {
        let mut num = 0.0;
        let mut den = 0.0;
        for t in 1..n {
            num += (sim[t] - obs[t]).powi(2);
            den += (obs[t] - obs[t - 1]).powi(2);
        }
        def(den > 0.0, 1.0 - num / den)
    };
    let adj = nse.and_then(|v| def(n > n_pred + 1, 1.0 - (1.0 - v) * (nf - 1.0) / (nf - n_pred as f64 - 1.0)));
    let br2 = r.and_then(|r| {
        let b = (cov / sst).abs();
        if b == 0.0 {
            None
        } else if b <= 1.0 {
            Some(b * r * r)
        } else {
            Some(r * r / b)
        }
    });

    let kge = |o: &[f64], s: &[f64]| -> Option<f64> {
        let k = o.len() as f64;
        let mo = o.iter().sum::<f64>() / k;
        let ms = s.iter().sum::<f64>() / k;
        let so = (o.iter().map(|v| (v - mo).powi(2)).sum::<f64>() / (k - 1.0)).sqrt();
        let s_s = (s.iter().map(|v| (v - ms).powi(2)).sum::<f64>() / (k - 1.0)).sqrt();
        let c: f64 = o.iter().zip(s).map(|(a, b)| (a - mo) * (b - ms)).sum::<f64>() / (k - 1.0);
        if so == 0.0 || s_s == 0.0 || mo == 0.0 || ms == 0.0 {
            return None;
        }
        let r = c / (so * s_s);
        Some(1.0 - ((r - 1.0).powi(2) + (s_s / so - 1.0).powi(2) + (ms / mo - 1.0).powi(2)).sqrt())
    };
    let eps = mo / 100.0;
    let kgelf = if eps > 0.0 && obs.iter().chain(sim).all(|v| v + eps > 0.0) {
        let io: Vec<f64> = obs.iter().map(|v| 1.0 / (v + eps)).collect();
        let is: Vec<f64> = sim.iter().map(|v| 1.0 / (v + eps)).collect();
        kge(&io, &is)
    } else {
        None
    };
    let kgenp = if mo == 0.0 || ms == 0.0 {
        None
    } else {
        let ro = average_ranks(obs);
        let rs = average_ranks(sim);
        let rho = pearson_plain(&ro, &rs);
        let mut fo: Vec<f64> = obs.iter().map(|v| v / (nf * mo)).collect();
        let mut fs: Vec<f64> = sim.iter().map(|v| v / (nf * ms)).collect();
        fo.sort_by(|a, b| a.partial_cmp(b).unwrap());
        fs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut gap = 0.0;
        for i in 0..n {
            gap += (fs[i] - fo[i]).abs();
        }
        let alpha = 1.0 - 0.5 * gap;
        rho.map(|rho| 1.0 - ((rho - 1.0).powi(2) + (alpha - 1.0).powi(2) + (ms / mo - 1.0).powi(2)).sqrt())
    };
    let ve = def(so != 0.0, 1.0 - sum_abs / so);

    vec![
        ("ME", Some(me)),
        ("MAE", Some(sum_abs / nf)),
        ("MSE", Some(mse)),
        ("RMSE", Some(rmse)),
        ("ubRMSE", Some((mse - me * me).max(0.0).sqrt())),
        ("NRMSE%", def(sd_o > 0.0, 100.0 * rmse / sd_o)),
        ("PBIAS%", def(so != 0.0, 100.0 * sum_d / so)),
        ("RSR", def(sd_o > 0.0, rmse / sd_o)),
        ("rSD", def(sd_o > 0.0, sd_s / sd_o)),
        ("NSE", nse),
        ("NNSE", nse.map(|v| 1.0 / (2.0 - v))),
        ("mNSE", def(sat > 0.0, 1.0 - sum_abs / sat)),
        ("rNSE", rnse),
        ("wNSE", wnse),
        ("d", d),
        ("dr", dr),
        ("md", md),
        ("rd", rd),
        ("cp", cp),
        ("r", r),
        ("R2", nse),
        ("adjR2", adj),
        ("bR2", br2),
        ("KGE", kge(obs, sim)),
        ("KGElf", kgelf),
        ("KGEnp", kgenp),
        ("VE", ve),
    ]
}

fn average_ranks(x: &[f64]) -> Vec<f64> {
    // Rank = 1 + (count below) + (ties − 1) / 2.
    x.iter()
        .map(|v| {
            let below = x.iter().filter(|w| *w < v).count() as f64;
            let equal = x.iter().filter(|w| *w == v).count() as f64;
            below + (equal + 1.0) / 2.0
        })
        .collect()
}

fn pearson_plain(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let mut c = 0.0;
    let mut va = 0.0;
    let mut vb = 0.0;
    for i in 0..a.len() {
        c += (a[i] - ma) * (b[i] - mb);
        va += (a[i] - ma).powi(2);
        vb += (b[i] - mb).powi(2);
    }
    (va > 0.0 && vb > 0.0).then(|| c / (va * vb).sqrt())
}

/// Least squares with an intercept via the normal equations. Returns
/// `(intercept, slopes)`.
pub fn ols_normal_equations(z: &DMatrix<f64>, y: &DVector<f64>) -> (f64, DVector<f64>) {
    let n = z.nrows();
    let q = z.ncols();
    let mut x = DMatrix::<f64>::zeros(n, q + 1);
    for i in 0..n {
        x[(i, 0)] = 1.0;
        for j in 0..q {
            x[(i, j + 1)] = z[(i, j)];
        }
    }
    let xtx = x.transpose() * &x;
    let xty = x.transpose() * y;
    let beta = xtx.cholesky().expect("full-rank design").solve(&xty);
    (beta[0], beta.rows(1, q).into_owned())
}
