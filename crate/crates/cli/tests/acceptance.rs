//! Acceptance suite: runs every criterion at its stated tolerance and
//! prints one pass/fail line per criterion. Exits nonzero if any fail.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use signalpanel_core::accounts::{summarize, AccountClass, AccountLabel, AccountLabels};
use signalpanel_core::allotax::rtd;
use signalpanel_core::ingest::{ingest_stream, ScopeFilter, StatePolygonSet};
use signalpanel_core::lexicon::rescale;
use signalpanel_core::panel::{
    build_panel, read_census_csv, read_land_csv, read_pit_csv, PanelOptions,
};
use signalpanel_core::stats::{changepoint, cross_correlation, spearman};
use signalpanel_core::textprep::{split_camel_hashtags, TokenCounts};

fn fixtures_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn check(cond: bool, message: String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(message)
    }
}

fn within(value: f64, target: f64, tol: f64) -> bool {
    (value - target).abs() <= tol
}

fn budget(elapsed: Duration, limit: Duration, what: &str) -> Result<(), String> {
    check(
        elapsed <= limit,
        format!("{what} took {elapsed:?}, budget {limit:?}"),
    )
}

// 1. Sentiment rescale reference points. Runtime < 1 s.
fn criterion_1() -> Result<String, String> {
    let start = Instant::now();
    check(
        within(rescale(5.98).map_err(|e| e.to_string())?, 0.245, 1e-12),
        "5.98 must rescale to 0.245".into(),
    )?;
    check(
        within(rescale(5.88).map_err(|e| e.to_string())?, 0.220, 1e-12),
        "5.88 must rescale to 0.220".into(),
    )?;
    check(
        within(rescale(5.92).map_err(|e| e.to_string())?, 0.223, 0.01),
        "5.92 must rescale to 0.223 within 0.01".into(),
    )?;
    check(
        within(rescale(5.90).map_err(|e| e.to_string())?, 0.225, 1e-12),
        "5.90 must rescale to 0.225".into(),
    )?;
    budget(start.elapsed(), Duration::from_secs(1), "rescale checks")?;
    Ok(format!("4 reference points, {:?}", start.elapsed()))
}

// 2. Camel-case hashtag rule.
fn criterion_2() -> Result<String, String> {
    check(
        split_camel_hashtags("#HomelessnessFirst") == "homelessness first",
        format!(
            "#HomelessnessFirst -> {:?}",
            split_camel_hashtags("#HomelessnessFirst")
        ),
    )?;
    check(
        split_camel_hashtags("#Homelessnessfirst") == "#Homelessnessfirst",
        format!(
            "#Homelessnessfirst must be unaffected, got {:?}",
            split_camel_hashtags("#Homelessnessfirst")
        ),
    )?;
    Ok("both forms handled".into())
}

// 3. Panel deltas for California and Massachusetts from the bundled
// census/land/point-in-time files, each within +/-5%.
fn criterion_3() -> Result<String, String> {
    let dir = fixtures_dir();
    let open = |name: &str| {
        std::fs::File::open(dir.join(name)).map_err(|e| format!("open {name}: {e}"))
    };
    let census = read_census_csv(open("census.csv")?).map_err(|e| e.to_string())?;
    let land = read_land_csv(open("land_area.csv")?).map_err(|e| e.to_string())?;
    let pit = read_pit_csv(open("pit.csv")?).map_err(|e| e.to_string())?;
    let panel = build_panel(&[], &pit, &census, &land, &[], &PanelOptions::default())
        .map_err(|e| e.to_string())?;
    let state = |code: &str| signalpanel_core::ingest::StateCode::parse(code).unwrap();

    let ca = panel
        .get(state("CA"), 2019)
        .ok_or("missing CA 2019 panel row")?;
    let (ca_dhc, ca_dhd) = (ca.d_hc.ok_or("CA dHC absent")?, ca.d_hd.ok_or("CA dHD absent")?);
    check(
        (ca_dhc - 0.00054).abs() / 0.00054 < 0.05,
        format!("CA dHC {ca_dhc} not within 5% of 0.00054"),
    )?;
    check(
        (ca_dhd - 0.137).abs() / 0.137 < 0.05,
        format!("CA dHD {ca_dhd} not within 5% of 0.137"),
    )?;

    let ma = panel
        .get(state("MA"), 2019)
        .ok_or("missing MA 2019 panel row")?;
    let (ma_dhc, ma_dhd) = (ma.d_hc.ok_or("MA dHC absent")?, ma.d_hd.ok_or("MA dHD absent")?);
    check(
        (ma_dhc.abs() - 0.00024).abs() / 0.00024 < 0.05,
        format!("MA |dHC| {} not within 5% of 0.00024", ma_dhc.abs()),
    )?;
    check(
        (ma_dhd.abs() - 0.20).abs() / 0.20 < 0.05,
        format!("MA |dHD| {} not within 5% of 0.20", ma_dhd.abs()),
    )?;
    Ok(format!(
        "CA dHC {ca_dhc:.6} dHD {ca_dhd:.4}; MA dHC {ma_dhc:.6} dHD {ma_dhd:.4}"
    ))
}

// ---------- Criterion 4 oracle: exhaustive permutation, independent route.

/// Midranks via the O(n^2) counting formula, independent of the library's
/// sort-based ranking.
fn oracle_midranks(values: &[f64]) -> Vec<f64> {
    values
        .iter()
        .map(|&v| {
            let less = values.iter().filter(|&&w| w < v).count() as f64;
            let equal = values.iter().filter(|&&w| w == v).count() as f64;
            less + (equal + 1.0) / 2.0
        })
        .collect()
}

/// Raw-moment Pearson, independent of the library's centered-sum route.
fn oracle_pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let ex = x.iter().sum::<f64>() / n;
    let ey = y.iter().sum::<f64>() / n;
    let exy = x.iter().zip(y).map(|(a, b)| a * b).sum::<f64>() / n;
    let exx = x.iter().map(|a| a * a).sum::<f64>() / n;
    let eyy = y.iter().map(|b| b * b).sum::<f64>() / n;
    (exy - ex * ey) / ((exx - ex * ex) * (eyy - ey * ey)).sqrt()
}

/// Exhaustive n! two-sided permutation p-value via Heap's algorithm.
fn oracle_exact_p(x: &[f64], y: &[f64]) -> f64 {
    let rx = oracle_midranks(x);
    let mut ry = oracle_midranks(y);
    let observed = oracle_pearson(&rx, &ry).abs();
    let threshold = observed - 1e-12;
    let n = ry.len();
    let mut counters = vec![0usize; n];
    let mut hits: u64 = 0;
    let mut total: u64 = 0;
    let mut tally = |perm: &[f64]| {
        total += 1;
        if oracle_pearson(&rx, perm).abs() >= threshold {
            hits += 1;
        }
    };
    tally(&ry);
    let mut i = 1;
    while i < n {
        if counters[i] < i {
            if i % 2 == 0 {
                ry.swap(0, i);
            } else {
                ry.swap(counters[i], i);
            }
            tally(&ry);
            counters[i] += 1;
            i = 1;
        } else {
            counters[i] = 0;
            i += 1;
        }
    }
    hits as f64 / total as f64
}

// 4. Spearman against the exhaustive oracle for n <= 7, plus the closed
// form. Runtime < 30 s.
fn criterion_4() -> Result<String, String> {
    let start = Instant::now();
    let r = spearman(&[1.0, 2.0, 3.0, 4.0, 5.0], &[2.0, 1.0, 4.0, 3.0, 5.0])
        .map_err(|e| e.to_string())?;
    check(
        within(r.coefficient, 0.8, 1e-12),
        format!("closed-form rho 0.8 check failed: {}", r.coefficient),
    )?;

    let mut rng = ChaCha8Rng::seed_from_u64(4040);
    let mut max_delta = 0.0f64;
    for case in 0..200 {
        let n = rng.gen_range(3..=7);
        let mut x: Vec<f64> = (0..n).map(|_| rng.gen_range(-10.0..10.0)).collect();
        let mut y: Vec<f64> = (0..n).map(|_| rng.gen_range(-10.0..10.0)).collect();
        // A third of the cases carry ties.
        if case % 3 == 0 {
            x = x.iter().map(|v| v.round()).collect();
            y = y.iter().map(|v| (v / 5.0).round() * 5.0).collect();
        }
        if x.iter().all(|v| *v == x[0]) || y.iter().all(|v| *v == y[0]) {
            continue;
        }
        let result = spearman(&x, &y).map_err(|e| format!("case {case}: {e}"))?;
        let oracle = oracle_exact_p(&x, &y);
        let delta = (result.p_value - oracle).abs();
        max_delta = max_delta.max(delta);
        check(
            delta < 1e-12,
            format!("case {case} (n={n}): p {} vs oracle {oracle}", result.p_value),
        )?;
    }
    budget(start.elapsed(), Duration::from_secs(30), "spearman suite")?;
    Ok(format!(
        "200 cases, max |dp| = {max_delta:.2e}, {:?}",
        start.elapsed()
    ))
}

// 5. Cross-correlation identities plus a 100-pair random suite against the
// direct Pearson-on-overlap oracle.
fn criterion_5() -> Result<String, String> {
    let x = [3.0, 1.0, 4.0, 1.0, 5.0, 9.0, 2.0, 6.0];
    let self_r = cross_correlation(&x, &x, 0).map_err(|e| e.to_string())?;
    check(
        within(self_r.coefficients[0].coefficient, 1.0, 1e-12),
        "self-correlation at lag 0 must be 1.0".into(),
    )?;

    let impulse_x = [0.0, 1.0, 0.0, 0.0];
    let impulse_y = [0.0, 0.0, 1.0, 0.0];
    let shifted = cross_correlation(&impulse_x, &impulse_y, 1).map_err(|e| e.to_string())?;
    let lag1 = shifted
        .coefficients
        .iter()
        .find(|c| c.lag == 1)
        .ok_or("lag 1 missing")?;
    check(
        within(lag1.coefficient, 1.0, 1e-12),
        format!("shifted impulse lag-1 coefficient {}", lag1.coefficient),
    )?;

    let mut rng = ChaCha8Rng::seed_from_u64(5050);
    let mut checked = 0u32;
    for pair in 0..100 {
        let n = rng.gen_range(8..=30);
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let max_lag = (n - 3).min(9);
        let result = cross_correlation(&x, &y, max_lag).map_err(|e| format!("pair {pair}: {e}"))?;
        for c in &result.coefficients {
            let overlap = n - c.lag;
            let oracle = oracle_pearson(&x[..overlap], &y[c.lag..]);
            check(
                within(c.coefficient, oracle, 1e-12),
                format!("pair {pair} lag {}: {} vs oracle {oracle}", c.lag, c.coefficient),
            )?;
            checked += 1;
        }
    }
    Ok(format!("identities plus {checked} lag coefficients matched"))
}

/// Standard-normal draw via Box-Muller on the deterministic stream.
fn normal(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

// 6. Changepoint detection on 100 noisy synthetic series and one noiseless
// series. Runtime < 60 s.
fn criterion_6() -> Result<String, String> {
    let start = Instant::now();
    let noiseless: Vec<f64> = (0..60)
        .map(|i| if i <= 30 { 0.0 } else { 0.5 * (i - 30) as f64 })
        .collect();
    let exact = changepoint(&noiseless, 1000, 6).map_err(|e| e.to_string())?;
    check(
        exact.candidate_index == 30 && exact.probability == 1.0,
        format!(
            "noiseless break: candidate {} probability {}",
            exact.candidate_index, exact.probability
        ),
    )?;

    let mut in_range = 0u32;
    let mut confident = 0u32;
    for series_idx in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(6000 + series_idx);
        let series: Vec<f64> = (0..60)
            .map(|i| {
                let trend = if i <= 30 { 0.0 } else { 0.5 * (i - 30) as f64 };
                trend + 0.1 * normal(&mut rng)
            })
            .collect();
        let result =
            changepoint(&series, 1000, 7_000 + series_idx).map_err(|e| e.to_string())?;
        if result.candidate_index.abs_diff(30) <= 2 {
            in_range += 1;
            if result.probability >= 0.9 {
                confident += 1;
            }
        }
    }
    check(
        in_range >= 90,
        format!("candidate within 30+/-2 in only {in_range}/100 cases"),
    )?;
    check(
        confident >= 90,
        format!("only {confident}/100 cases both in range and with probability >= 0.9"),
    )?;
    budget(start.elapsed(), Duration::from_secs(60), "changepoint suite")?;
    Ok(format!(
        "{in_range}/100 in range, {confident}/100 with probability >= 0.9, {:?}",
        start.elapsed()
    ))
}

// 7. Rank-turbulence divergence identities and invariances.
fn criterion_7() -> Result<String, String> {
    let alpha = 1.0 / 3.0;
    let counts_of = |pairs: &[(&str, u64)]| {
        let mut c = TokenCounts::new();
        for &(t, n) in pairs {
            c.add_count(t, n);
        }
        c
    };

    let same = counts_of(&[("a", 4), ("b", 2), ("c", 1)]);
    let identical = rtd(&same, &same, alpha).map_err(|e| e.to_string())?;
    check(
        identical.total == 0.0,
        format!("identical corpora total {}", identical.total),
    )?;

    let left = counts_of(&[("a", 3), ("b", 2), ("c", 1)]);
    let right = counts_of(&[("x", 3), ("y", 2), ("z", 1)]);
    let disjoint = rtd(&left, &right, alpha).map_err(|e| e.to_string())?;
    check(
        within(disjoint.total, 1.0, 1e-9),
        format!("disjoint equal-size total {}", disjoint.total),
    )?;

    let pool: Vec<String> = (0..40).map(|i| format!("w{i}")).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(7070);
    for pair in 0..100 {
        let draw = |rng: &mut ChaCha8Rng| {
            let k = rng.gen_range(3..=25);
            let mut c = TokenCounts::new();
            for _ in 0..k {
                let token = &pool[rng.gen_range(0..pool.len())];
                c.add_count(token, rng.gen_range(1..100));
            }
            c
        };
        let a = draw(&mut rng);
        let b = draw(&mut rng);
        let ab = rtd(&a, &b, alpha).map_err(|e| e.to_string())?;
        let ba = rtd(&b, &a, alpha).map_err(|e| e.to_string())?;
        check(
            within(ab.total, ba.total, 1e-9),
            format!("pair {pair}: symmetry {} vs {}", ab.total, ba.total),
        )?;
        check(
            (0.0..=1.0 + 1e-12).contains(&ab.total),
            format!("pair {pair}: total {} outside [0,1]", ab.total),
        )?;
        let scale = rng.gen_range(2u64..20);
        let mut scaled = TokenCounts::new();
        for (t, c) in a.iter() {
            scaled.add_count(t, c * scale);
        }
        let scaled_total = rtd(&scaled, &b, alpha).map_err(|e| e.to_string())?.total;
        check(
            within(ab.total, scaled_total, 1e-9),
            format!("pair {pair}: count-scaling changed total"),
        )?;
        let sum: f64 = ab.contributions.iter().map(|c| c.contribution).sum();
        check(
            (sum - ab.total).abs() <= 1e-9 * ab.total.max(1.0),
            format!("pair {pair}: contributions sum {sum} vs total {}", ab.total),
        )?;
    }
    Ok("identities plus 100-pair symmetry/scaling/sum suite".into())
}

// 8. Account splits planted from the published percentages.
fn criterion_8() -> Result<String, String> {
    // Low-density: 151 single of 200 accounts -> 75.5% / 24.5%.
    let mut low_ids: Vec<String> = (0..151).map(|i| format!("s{i}")).collect();
    let mut labels = AccountLabels::default();
    for i in 0..49 {
        for _ in 0..3 {
            low_ids.push(format!("m{i}"));
        }
        labels.insert(AccountLabel {
            author_id: format!("m{i}"),
            class: AccountClass::Individual,
            subtype: None,
        });
    }
    let low = summarize(low_ids.iter().map(|s| s.as_str()), &labels, 20)
        .map_err(|e| e.to_string())?;
    check(
        low.single_post_pct == 75.5 && low.multi_post_pct == 24.5,
        format!("low-density split {}/{}", low.single_post_pct, low.multi_post_pct),
    )?;

    // High-density: 173 single of 250 accounts -> 69.2% / 30.8%.
    let mut high_ids: Vec<String> = (0..173).map(|i| format!("hs{i}")).collect();
    let mut high_labels = AccountLabels::default();
    for i in 0..77 {
        for _ in 0..4 {
            high_ids.push(format!("hm{i}"));
        }
        high_labels.insert(AccountLabel {
            author_id: format!("hm{i}"),
            class: AccountClass::Individual,
            subtype: None,
        });
    }
    let high = summarize(high_ids.iter().map(|s| s.as_str()), &high_labels, 20)
        .map_err(|e| e.to_string())?;
    check(
        high.single_post_pct == 69.2 && high.multi_post_pct == 30.8,
        format!("high-density split {}/{}", high.single_post_pct, high.multi_post_pct),
    )?;

    // Top-20 with 18 individuals -> 90% individual share.
    let mut ids: Vec<String> = Vec::new();
    let mut top_labels = AccountLabels::default();
    for i in 0..20 {
        let id = format!("top{i:02}");
        for _ in 0..(30 - i) {
            ids.push(id.clone());
        }
        top_labels.insert(AccountLabel {
            author_id: id,
            class: if i < 18 {
                AccountClass::Individual
            } else {
                AccountClass::Entity
            },
            subtype: None,
        });
    }
    let top = summarize(ids.iter().map(|s| s.as_str()), &top_labels, 20)
        .map_err(|e| e.to_string())?;
    check(
        top.top_k_individual_account_pct == 90.0,
        format!("top-20 individual share {}", top.top_k_individual_account_pct),
    )?;
    check(
        top.individual_entity_ratio == "9:1",
        format!("top-20 ratio {}", top.individual_entity_ratio),
    )?;
    Ok("75.5/24.5, 69.2/30.8, and 90% top-20 splits exact".into())
}

// 9. End-to-end determinism of `report` across runs and thread counts.
fn criterion_9() -> Result<String, String> {
    let binary = env!("CARGO_BIN_EXE_signalpanel");
    let conf = fixtures_dir().join("report.conf");
    let base = tempfile::tempdir().map_err(|e| e.to_string())?;
    let run = |name: &str, threads: Option<usize>| -> Result<PathBuf, String> {
        let out = base.path().join(name);
        let mut cmd = Command::new(binary);
        if let Some(t) = threads {
            cmd.arg("--threads").arg(t.to_string());
        }
        cmd.arg("report")
            .arg("--config")
            .arg(&conf)
            .arg("--out-dir")
            .arg(&out)
            .current_dir(fixtures_dir().parent().unwrap());
        let output = cmd.output().map_err(|e| e.to_string())?;
        check(
            output.status.success(),
            format!(
                "report run {name} failed: {}",
                String::from_utf8_lossy(&output.stderr)
            ),
        )?;
        Ok(out)
    };
    let a = run("a", None)?;
    let b = run("b", None)?;
    let t1 = run("t1", Some(1))?;
    let t4 = run("t4", Some(4))?;

    let mut compared = 0u32;
    for dir in [&b, &t1, &t4] {
        compare_trees(&a, dir, &mut compared)?;
    }
    Ok(format!("{compared} file comparisons byte-identical"))
}

fn compare_trees(a: &Path, b: &Path, compared: &mut u32) -> Result<(), String> {
    let mut names: Vec<PathBuf> = Vec::new();
    collect_files(a, a, &mut names)?;
    let mut other: Vec<PathBuf> = Vec::new();
    collect_files(b, b, &mut other)?;
    check(
        names == other,
        format!("file sets differ: {} vs {}", a.display(), b.display()),
    )?;
    for rel in names {
        let left = std::fs::read(a.join(&rel)).map_err(|e| e.to_string())?;
        let right = std::fs::read(b.join(&rel)).map_err(|e| e.to_string())?;
        check(
            left == right,
            format!("{} differs between {} and {}", rel.display(), a.display(), b.display()),
        )?;
        *compared += 1;
    }
    Ok(())
}

fn collect_files(root: &Path, dir: &Path, out: &mut Vec<PathBuf>) -> Result<(), String> {
    let mut entries: Vec<_> = std::fs::read_dir(dir)
        .map_err(|e| e.to_string())?
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    entries.sort_by_key(|e| e.path());
    for entry in entries {
        let path = entry.path();
        if path.is_dir() {
            collect_files(root, &path, out)?;
        } else {
            out.push(path.strip_prefix(root).unwrap().to_path_buf());
        }
    }
    Ok(())
}

// 10. The bundled corpus reproduces the 2.1% unresolved rate exactly.
fn criterion_10() -> Result<String, String> {
    let dir = fixtures_dir();
    let polygons = StatePolygonSet::load(&dir.join("state_polygons.geojson"))
        .map_err(|e| e.to_string())?;
    let lines =
        std::fs::read_to_string(dir.join("tweets.jsonl")).map_err(|e| e.to_string())?;
    let (_, stats) = ingest_stream(lines.lines(), &polygons, &ScopeFilter::default());
    check(stats.parsed == 1000, format!("parsed {}", stats.parsed))?;
    check(stats.unresolved == 21, format!("unresolved {}", stats.unresolved))?;
    let rate = stats.unresolved as f64 / stats.parsed as f64;
    check(rate == 0.021, format!("unresolved rate {rate}"))?;
    Ok("21/1000 = 2.1% exactly".into())
}

fn main() {
    let criteria: Vec<(&str, fn() -> Result<String, String>)> = vec![
        ("01 sentiment rescale reference points", criterion_1),
        ("02 camel-case hashtag rule", criterion_2),
        ("03 panel deltas CA/MA within 5%", criterion_3),
        ("04 spearman exact-permutation oracle", criterion_4),
        ("05 cross-correlation oracle suite", criterion_5),
        ("06 changepoint synthetic suite", criterion_6),
        ("07 rank-turbulence divergence identities", criterion_7),
        ("08 account composition planted splits", criterion_8),
        ("09 report end-to-end determinism", criterion_9),
        ("10 ingest fixture 2.1% unresolved", criterion_10),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        match std::panic::catch_unwind(run) {
            Ok(Ok(detail)) => println!("ACCEPTANCE {name}: PASS ({detail})"),
            Ok(Err(message)) => {
                failed += 1;
                println!("ACCEPTANCE {name}: FAIL ({message})");
            }
            Err(_) => {
                failed += 1;
                println!("ACCEPTANCE {name}: FAIL (panicked)");
            }
        }
    }
    if failed > 0 {
        eprintln!("{failed} criterion(s) failed");
        std::process::exit(1);
    }
}
