//! Acceptance gate. Runs the `commgrowth` binary on every criterion,
//! prints one line per criterion and exits nonzero if any fails.

use std::process::{Command, Output};
use std::time::{Duration, Instant};

use commgrowth::goodbasis::det_index;
use commgrowth::latticeenum::iterated_envelopes;
use commgrowth::rational::parse_rational;
use commgrowth::zeta::expand;
use commgrowth::{Catalog, Rational};
use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_commgrowth");

type Criterion = fn() -> Result<String, String>;

fn run(args: &[&str]) -> Output {
    Command::new(BIN)
        .args(["--no-cache"])
        .args(args)
        .env_remove("COMMGROWTH_CONFIG")
        .env_remove("RUST_LOG")
        .output()
        .expect("binary runs")
}

fn json(args: &[&str]) -> Result<Value, String> {
    let out = run(args);
    if !out.status.success() {
        return Err(format!("{args:?} exited {:?}: {}", out.status.code(), String::from_utf8_lossy(&out.stderr)));
    }
    serde_json::from_slice(&out.stdout).map_err(|e| format!("{args:?}: {e}"))
}

fn coeffs(v: &Value) -> Vec<u64> {
    v["coeffs"].as_array().expect("coeffs").iter().map(|x| x.as_u64().expect("integer")).collect()
}

fn count(group: &str, p: u64, k: usize, method: &str) -> Result<Vec<u64>, String> {
    let (p, k) = (p.to_string(), k.to_string());
    json(&["count", "--group", group, "--prime", &p, "--max-k", &k, "--method", method]).map(|v| coeffs(&v))
}

fn rationals(v: &Value) -> Vec<Rational> {
    v.as_array().expect("array").iter().map(|x| parse_rational(x.as_str().expect("string")).expect("rational")).collect()
}

fn within(start: Instant, budget: Duration) -> Result<(), String> {
    let t = start.elapsed();
    if t <= budget {
        Ok(())
    } else {
        Err(format!("took {t:.2?}, budget {budget:?}"))
    }
}

fn expect<T: PartialEq + std::fmt::Debug>(what: &str, got: T, want: T) -> Result<(), String> {
    if got == want {
        Ok(())
    } else {
        Err(format!("{what}: got {got:?}, expected {want:?}"))
    }
}

fn omega(mut n: u64) -> u32 {
    let mut w = 0;
    let mut q = 2;
    while q * q <= n {
        if n.is_multiple_of(q) {
            w += 1;
            while n.is_multiple_of(q) {
                n /= q;
            }
        }
        q += 1;
    }
    w + u32::from(n > 1)
}

/// Sublattices of Z² of index `n`: Hermite forms `[[a, b], [0, d]]`.
fn hnf_z2(n: u64) -> u64 {
    let mut c = 0;
    for a in 1..=n {
        if n.is_multiple_of(a) {
            for _b in 0..n / a {
                c += 1;
            }
        }
    }
    c
}

fn c1_additive_coefficients() -> Result<String, String> {
    for p in [2, 3, 5] {
        let t = Instant::now();
        expect(&format!("Z1 p={p}"), count("Z1", p, 4, "search")?, vec![1, 2, 2, 2, 2])?;
        within(t, Duration::from_secs(1))?;
    }
    Ok("Z1 at p = 2, 3, 5: (1,2,2,2,2)".into())
}

fn c2_additive_rational_function() -> Result<String, String> {
    for p in [2, 3, 5] {
        let t = Instant::now();
        let v = json(&["zeta", "--group", "Z1", "--prime", &p.to_string(), "--max-k", "4", "--fit"])?;
        let fit = &v["fit"];
        let one = Rational::from_integer(1.into());
        expect(&format!("numerator p={p}"), rationals(&fit["numerator"]), vec![one.clone(), one.clone()])?;
        expect(&format!("denominator p={p}"), rationals(&fit["denominator"]), vec![one.clone(), -one])?;
        within(t, Duration::from_secs(1))?;
    }
    Ok("(1 + t) / (1 - t) at p = 2, 3, 5".into())
}

fn c3_additive_global() -> Result<String, String> {
    let t = Instant::now();
    let v = json(&["zeta", "--group", "Z1", "--scope", "global", "--max-n", "200"])?;
    let want: Vec<u64> = (1..=200).map(|n| 1 << omega(n)).collect();
    expect("c_n", coeffs(&v), want)?;
    within(t, Duration::from_secs(10))?;
    Ok(format!("c_n = 2^omega(n) for n <= 200 in {:.2?}", t.elapsed()))
}

fn c4_plane() -> Result<String, String> {
    let t = Instant::now();
    for p in [2u64, 3] {
        let s = count("Z2", p, 2, "search")?;
        expect(&format!("Z2 c_{p}"), s[1], 2 * (p + 1))?;
        expect(&format!("Z2 p={p} search vs oracle"), s.clone(), count("Z2", p, 2, "oracle")?)?;
    }
    within(t, Duration::from_secs(120))?;
    Ok(format!("c_p = 6, 8; search = oracle for K <= 2 in {:.2?}", t.elapsed()))
}

fn c5_heisenberg() -> Result<String, String> {
    let t = Instant::now();
    let s = count("heis3", 2, 1, "search")?;
    expect("heis3 c_2", s.clone(), vec![1, 4])?;
    let o = json(&[
        "count", "--group", "heis3", "--prime", "2", "--max-k", "1", "--method", "oracle",
        "--max-oracle-group-size", "1024",
    ])?;
    expect("heis3 oracle", coeffs(&o), s)?;
    within(t, Duration::from_secs(300))?;
    Ok(format!("c_2 = 4, search = oracle with quotient capped at 2^10, {:.2?}", t.elapsed()))
}

fn c6_determinant_identity() -> Result<String, String> {
    let configs: &[(&str, u64, usize)] =
        &[("Z1", 2, 4), ("Z1", 3, 4), ("Z1", 5, 4), ("Z2", 2, 2), ("Z2", 3, 2), ("heis3", 2, 1)];
    let mut total = 0;
    for &(g, p, k) in configs {
        let out = run(&["lattices", "--group", g, "--prime", &p.to_string(), "--max-k", &k.to_string()]);
        if !out.status.success() {
            return Err(format!("lattices {g} p={p} exited {:?}", out.status.code()));
        }
        let mut per_k = vec![0u64; k + 1];
        for line in String::from_utf8_lossy(&out.stdout).lines() {
            let r: Value = serde_json::from_str(line).map_err(|e| e.to_string())?;
            let sum = |d: &Value| d["e"].as_array().expect("exponents").iter().map(|x| x.as_i64().unwrap()).sum::<i64>();
            let (a, b) = (r["a"].as_i64().unwrap(), r["b"].as_i64().unwrap());
            // Γ has exponent sum 0, so log_p c = 2 e(Δ∩Γ) - e(Δ) - e(Γ).
            let det = 2 * sum(&r["B"]) - sum(&r["A"]);
            if a + b != det || r["k"].as_i64() != Some(a + b) {
                return Err(format!("{g} p={p}: {} has a+b = {} but determinant gives {det}", r["key"], a + b));
            }
            per_k[(a + b) as usize] += 1;
            total += 1;
        }
        expect(&format!("{g} p={p} record counts"), per_k, count(g, p, k, "search")?)?;
    }
    Ok(format!("{total} lattices, all satisfy the determinant identity"))
}

fn c7_down_only() -> Result<String, String> {
    let t = Instant::now();
    let want: Vec<u64> = (0..=3).map(|k| hnf_z2(1 << k)).collect();
    expect("Hermite counter", want.clone(), vec![1, 3, 7, 15])?;
    expect("Z2 down-only", count("Z2", 2, 3, "down-only")?, want)?;
    for p in [2u64, 3] {
        expect(&format!("heis3 a_{p}"), count("heis3", p, 1, "down-only")?, vec![1, p + 1])?;
    }
    within(t, Duration::from_secs(60))?;
    Ok("Z2 (1,3,7,15) matches Hermite forms; heis3 a_p = p+1 at p = 2, 3".into())
}

fn c8_envelope_bound() -> Result<String, String> {
    let configs: &[(&str, u64, usize)] = &[
        ("Z1", 2, 4), ("Z1", 3, 4), ("Z1", 5, 4), ("Z2", 2, 2), ("Z2", 3, 2),
        ("heis3", 2, 3), ("heis3", 3, 2), ("u4", 2, 1),
    ];
    let mut steps = 0;
    for &(id, p, k) in configs {
        let g = Catalog::builtin().get(id).map_err(|e| e.to_string())?;
        let bound = (g.dim * g.class * (g.class + 1) / 2) as i64;
        let chain = iterated_envelopes(&g, p, k, 64).map_err(|e| format!("{id} p={p}: {e}"))?;
        for w in chain.windows(2) {
            let idx = det_index(&w[0], &w[1]).map_err(|e| e.to_string())?;
            if idx > bound {
                return Err(format!("{id} p={p}: step index p^{idx} above p^{bound}"));
            }
            steps += 1;
        }
    }
    // The oracle runs of criteria 4 and 5 build the same chains and refuse
    // any step over the bound.
    expect("oracle run", count("heis3", 2, 1, "oracle")?, vec![1, 4])?;
    Ok(format!("{steps} envelope steps within p^(d c (c+1) / 2)"))
}

fn c9_recurrence_fitting() -> Result<String, String> {
    let mut notes = Vec::new();
    for (g, k) in [("heis3", 3), ("Z2", 4)] {
        let v = json(&["zeta", "--group", g, "--prime", "2", "--max-k", &k.to_string(), "--fit"])?;
        let series: Vec<Rational> = coeffs(&v["series"]).into_iter().map(|c| Rational::from_integer(c.into())).collect();
        expect(&format!("{g} terms"), series.len(), k + 1)?;
        if v["fit"].is_object() {
            let (n, d) = (rationals(&v["fit"]["numerator"]), rationals(&v["fit"]["denominator"]));
            expect(&format!("{g} re-expansion"), expand(&n, &d, series.len()), series)?;
            notes.push(format!("{g}: fit {}", v["fit"]["rational_function"]));
        } else {
            let diag = v["diagnostic"].as_str().unwrap_or_default();
            if !diag.starts_with("insufficient data") {
                return Err(format!("{g}: neither a fit nor an insufficient-data report: {v}"));
            }
            notes.push(format!("{g} K={k}: insufficient data"));
        }
    }
    Ok(notes.join("; "))
}

fn c10_determinism() -> Result<String, String> {
    let configs: &[(&str, &str, &str)] = &[("Z2", "2", "2"), ("Z2", "3", "2"), ("heis3", "2", "1")];
    let mut n = 0;
    for &(g, p, k) in configs {
        for method in ["search", "oracle"] {
            let base = ["count", "--group", g, "--prime", p, "--max-k", k, "--method", method];
            let one = run(&[&base[..], &["--jobs", "1"]].concat());
            let eight = run(&[&base[..], &["--jobs", "8"]].concat());
            if !one.status.success() || one.stdout != eight.stdout {
                return Err(format!("{g} p={p} {method}: outputs differ between 1 and 8 workers"));
            }
            n += 1;
        }
    }
    Ok(format!("{n} configurations byte-identical with 1 and 8 workers"))
}

fn main() {
    let criteria: [(&str, Criterion); 10] = [
        ("additive group coefficients", c1_additive_coefficients),
        ("additive group rational function", c2_additive_rational_function),
        ("additive group global coefficients", c3_additive_global),
        ("plane counts and oracle agreement", c4_plane),
        ("Heisenberg counts and oracle agreement", c5_heisenberg),
        ("determinant identity on emitted lattices", c6_determinant_identity),
        ("down-only subgroup counts", c7_down_only),
        ("envelope step bound", c8_envelope_bound),
        ("recurrence fitting without extrapolation", c9_recurrence_fitting),
        ("determinism across worker counts", c10_determinism),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let res = f();
        let secs = t.elapsed().as_secs_f64();
        match res {
            Ok(detail) => println!("criterion {:>2} PASS {name} ({secs:.2}s): {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} FAIL {name} ({secs:.2}s): {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
