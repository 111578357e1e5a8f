use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use lsemix::orders::check_sme_table;
use lsemix::{DensityGenerator, MixingLaw, OrderKind};
use lsemix_cli::{parse_scenario, CliError};
use proptest::prelude::*;
use serde_json::Value;
use tempfile::TempDir;

const BIN: &str = env!("CARGO_BIN_EXE_lsemix");

fn lsemix(dir: &Path, args: &[&str]) -> Output {
    Command::new(BIN).current_dir(dir).env_remove("LSEMIX_OUT_DIR").args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("terminated by signal")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    fs::write(dir.join(name), text).unwrap();
    name.to_string()
}

fn report(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

fn ghss_block(name: &str, mu: f64, delta: f64, lambda: f64) -> String {
    format!(
        "[{name}]\nmu = [{mu:?}]\nsigma = [[1.0]]\ndelta = [{delta:?}]\nalpha = \"inv_sqrt_z\"\nbeta = \"inv_z\"\nmixing = {{ law = \"beta_lambda_one\", lambda = {lambda:?} }}\n"
    )
}

const BIVARIATE: &str = "[d1]
mu = [0.0, 0.5]
sigma = [[1.0, 0.3], [0.3, 2.0]]
generator = { family = \"student\", m = 5 }
alpha = \"sqrt_z\"
mixing = { law = \"discrete_weighted\", atoms = [[0.5, 0.4], [2.0, 0.6]] }
";

#[test]
fn reflexive_spec_exits_zero() {
    let dir = TempDir::new().unwrap();
    let spec = format!("{BIVARIATE}\n{}", BIVARIATE.replace("[d1]", "[d2]"));
    let f = write(dir.path(), "s.toml", &spec);
    let out = lsemix(dir.path(), &["check", "--spec", &f]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let r = report(dir.path());
    assert_eq!(r["schema_version"], 1);
    let orders = r["orders"].as_array().unwrap();
    assert_eq!(orders.len(), 13);
    assert!(orders.iter().all(|o| o["verdict"] == "ordered"), "{orders:?}");
    assert!(!dir.path().join("curves.csv").exists());
}

#[test]
fn violated_order_exits_two() {
    let dir = TempDir::new().unwrap();
    let spec = "orders = [\"cx\"]\n[d1]\nmu = [0.0]\nsigma = [[1.0]]\n[d2]\nmu = [1.0]\nsigma = [[2.0]]\n";
    let f = write(dir.path(), "s.toml", spec);
    let out = lsemix(dir.path(), &["check", "--spec", &f, "--quiet"]);
    assert_eq!(code(&out), 2);
    assert!(out.stdout.is_empty());
    assert_eq!(report(dir.path())["orders"][0]["verdict"], "not_ordered");
}

#[test]
fn inconclusive_order_exits_three() {
    let dir = TempDir::new().unwrap();
    let spec = format!("orders = [\"st\"]\n{}\n{}", ghss_block("d1", 0.0, 0.5, 3.0), ghss_block("d2", 2.0, 0.3, 3.0));
    let f = write(dir.path(), "s.toml", &spec);
    let out = lsemix(dir.path(), &["check", "--spec", &f]);
    assert_eq!(code(&out), 3);
    let r = report(dir.path());
    assert_eq!(r["orders"][0]["verdict"], "inconclusive");
    assert_eq!(r["summary"]["exit_code"], 3);
}

#[test]
fn monte_carlo_settles_an_inconclusive_verdict() {
    let dir = TempDir::new().unwrap();
    let spec = format!(
        "seed = 3\norders = [\"st\"]\n{}\n{}\n[mc]\nsamples = 200000\n",
        ghss_block("d1", 0.0, 0.5, 3.0),
        ghss_block("d2", 2.0, 0.3, 3.0)
    );
    let f = write(dir.path(), "s.toml", &spec);
    let out = lsemix(dir.path(), &["check", "--spec", &f]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
    let r = report(dir.path());
    assert_eq!(r["orders"][0]["mc"]["pass"], true);
    assert_eq!(r["orders"][0]["mc_verified"], true);
}

#[test]
fn parse_errors_exit_one() {
    let dir = TempDir::new().unwrap();
    let garbage = write(dir.path(), "g.toml", "[d1\nmu = ");
    let out = lsemix(dir.path(), &["check", "--spec", &garbage]);
    assert_eq!(code(&out), 1);
    assert!(!dir.path().join("report.json").exists());

    let lambda = format!("{}\n{}", ghss_block("d1", 0.0, 0.5, 0.0), ghss_block("d2", 0.0, 0.5, 0.0));
    let f = write(dir.path(), "l.toml", &lambda);
    let out = lsemix(dir.path(), &["check", "--spec", &f]);
    assert_eq!(code(&out), 1);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 7"), "{err}");

    let mismatch = format!("{}\n{}", ghss_block("d1", 0.0, 0.5, 3.0), ghss_block("d2", 0.0, 0.5, 4.0));
    let f = write(dir.path(), "m.toml", &mismatch);
    let out = lsemix(dir.path(), &["check", "--spec", &f]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("family mismatch"));

    assert_eq!(code(&lsemix(dir.path(), &["check"])), 1);
    assert_eq!(code(&lsemix(dir.path(), &["check", "--spec", "missing.toml"])), 1);
    assert_eq!(code(&lsemix(dir.path(), &["--frobnicate"])), 1);
    assert_eq!(code(&lsemix(dir.path(), &["--help"])), 0);
}

#[test]
fn same_seed_gives_identical_artifacts() {
    let dir = TempDir::new().unwrap();
    let spec = format!(
        "seed = 21\n{BIVARIATE}\n{}\n[mc]\nsamples = 40000\n",
        BIVARIATE.replace("[d1]", "[d2]").replace("[[1.0, 0.3], [0.3, 2.0]]", "[[1.5, 0.4], [0.4, 2.5]]")
    );
    let f = write(dir.path(), "s.toml", &spec);
    let run = |out: &str, extra: &[&str]| {
        let mut args = vec!["check", "--spec", &f, "--out", out, "--quiet"];
        args.extend_from_slice(extra);
        let o = lsemix(dir.path(), &args);
        assert!(matches!(code(&o), 0 | 2 | 3), "{}", String::from_utf8_lossy(&o.stderr));
        let d = dir.path().join(out);
        (fs::read(d.join("report.json")).unwrap(), fs::read(d.join("curves.csv")).unwrap())
    };
    let a = run("a", &[]);
    let b = run("b", &[]);
    assert_eq!(a, b);
    let c = run("c", &["--seed", "22"]);
    assert_ne!(a.1, c.1);

    let curves = |out: &str| {
        let o = lsemix(dir.path(), &["curves", "--spec", &f, "--out", out, "--seed", "5", "--quiet"]);
        assert_eq!(code(&o), 0);
        fs::read(dir.path().join(out).join("curves.csv")).unwrap()
    };
    assert_eq!(curves("x"), curves("y"));
}

#[test]
fn out_dir_from_environment() {
    let dir = TempDir::new().unwrap();
    let f = write(dir.path(), "s.toml", "[d1]\nmu = [0.0]\nsigma = [[1.0]]\n[d2]\nmu = [0.0]\nsigma = [[1.0]]\n");
    let out = Command::new(BIN)
        .current_dir(dir.path())
        .env("LSEMIX_OUT_DIR", "from_env")
        .args(["--spec", &f, "--quiet"])
        .output()
        .unwrap();
    assert_eq!(code(&out), 0);
    assert!(dir.path().join("from_env/report.json").exists());
}

#[test]
fn curve_csv_layout() {
    let dir = TempDir::new().unwrap();
    let spec = format!(
        "seed = 9\n{}\n{}\n[mc]\nsamples = 50000\n[outputs]\ncurves = \"fig/curves.csv\"\n",
        ghss_block("d1", 0.0, 0.2, 3.0),
        ghss_block("d2", 0.5, 0.2, 3.0)
    );
    let f = write(dir.path(), "s.toml", &spec);
    let out = lsemix(dir.path(), &["curves", "--spec", &f]);
    assert_eq!(code(&out), 0);
    let text = fs::read_to_string(dir.path().join("fig/curves.csv")).unwrap();
    assert!(!text.contains('\r'));
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,survival_1,survival_2,se_1,se_2,stoploss_1,stoploss_2"));
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 41);
    for w in rows.windows(2) {
        assert!(w[1][0] > w[0][0]);
        assert!(w[1][1] <= w[0][1] && w[1][2] <= w[0][2]);
        assert!(w[1][5] <= w[0][5] && w[1][6] <= w[0][6]);
    }
}

#[test]
fn cones_subcommand() {
    let dir = TempDir::new().unwrap();
    let f = write(dir.path(), "m.txt", "1 0\n0 -1\n");
    let out = lsemix(dir.path(), &["cones", "--matrix", &f]);
    assert_eq!(code(&out), 0);
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["copositive"]["status"], "outside");
    let w: Vec<f64> = serde_json::from_value(v["copositive"]["witness"]["vector"].clone()).unwrap();
    assert!(w.iter().all(|&x| x >= 0.0));
    assert!(w[0] * w[0] - w[1] * w[1] < 0.0);

    let horn = "1 -1 1 1 -1\n-1 1 -1 1 1\n1 -1 1 -1 1\n1 1 -1 1 -1\n-1 1 1 -1 1\n";
    let f = write(dir.path(), "h.txt", horn);
    let v: Value = serde_json::from_slice(&lsemix(dir.path(), &["cones", "--matrix", &f]).stdout).unwrap();
    assert_eq!(v["copositive"]["status"], "inside");
    assert_eq!(v["psd"]["status"], "outside");

    let f = write(dir.path(), "bad.txt", "1 2\n3 4\n");
    assert_eq!(code(&lsemix(dir.path(), &["cones", "--matrix", &f])), 1);
}

#[test]
fn assumptions_subcommand() {
    let dir = TempDir::new().unwrap();
    let out = lsemix(dir.path(), &["assumptions", "--generator", "student", "--m", "2", "--sigma1", "2", "--sigma2", "1"]);
    assert_eq!(code(&out), 0);
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    let r = &v["results"][0];
    assert!((r["c_value"].as_f64().unwrap() - 0.25).abs() < 1e-12);
    assert_eq!(r["satisfies_assumption1"], true);
    assert_eq!(r["satisfies_assumption2"], true);

    let out = lsemix(dir.path(), &["assumptions", "--sigma1", "1", "--sigma2", "2"]);
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    let results = v["results"].as_array().unwrap();
    assert_eq!(results.len(), 6);
    let normal = results.iter().find(|r| r["generator"]["family"] == "normal").unwrap();
    assert_eq!(normal["c_value"], "inf");

    assert_eq!(code(&lsemix(dir.path(), &["assumptions", "--generator", "student", "--sigma1", "2", "--sigma2", "1"])), 1);
}

/// A scale-mixture pair checked through the CLI gets the same verdicts as
/// the simplified table.
#[test]
fn scale_mixture_spec_matches_table() {
    let dir = TempDir::new().unwrap();
    let d2 = BIVARIATE
        .replace("[d1]", "[d2]")
        .replace("mu = [0.0, 0.5]", "mu = [0.2, 0.5]")
        .replace("[[1.0, 0.3], [0.3, 2.0]]", "[[1.4, 0.6], [0.6, 2.3]]");
    let text = format!("{BIVARIATE}\n{d2}");
    let f = write(dir.path(), "s.toml", &text);
    let out = lsemix(dir.path(), &["check", "--spec", &f, "--quiet"]);
    assert!(matches!(code(&out), 0 | 2 | 3));
    let r = report(dir.path());

    let spec = parse_scenario(&text).unwrap();
    let (a, b) = spec.distributions().unwrap();
    for entry in r["orders"].as_array().unwrap() {
        let order: OrderKind = serde_json::from_value(entry["order"].clone()).unwrap();
        let table = check_sme_table(&a, &b, order).unwrap();
        assert_eq!(entry["verdict"], serde_json::to_value(table.verdict).unwrap(), "{order}");
    }
}

fn arb_generator() -> impl Strategy<Value = DensityGenerator> {
    prop_oneof![
        Just(DensityGenerator::Normal),
        Just(DensityGenerator::Cauchy),
        Just(DensityGenerator::Laplace),
        Just(DensityGenerator::Logistic),
        (3u32..20).prop_map(|m| DensityGenerator::Student { m }),
        (1.1f64..4.0).prop_map(|s| DensityGenerator::ExponentialPower { s }),
    ]
}

fn arb_mixing() -> impl Strategy<Value = MixingLaw> {
    prop_oneof![
        (0.1f64..5.0).prop_map(|z0| MixingLaw::Degenerate { z0 }),
        (0.5f64..8.0).prop_map(|lambda| MixingLaw::BetaLambdaOne { lambda }),
        (0.2f64..2.0, 0.2f64..2.0).prop_map(|(z, w)| MixingLaw::DiscreteWeighted { atoms: vec![(z, w), (z + 1.0, 1.0 - w / 4.0)] }),
    ]
}

fn normalize(atoms: MixingLaw) -> MixingLaw {
    match atoms {
        MixingLaw::DiscreteWeighted { atoms } => {
            let total: f64 = atoms.iter().map(|a| a.1).sum();
            MixingLaw::DiscreteWeighted { atoms: atoms.into_iter().map(|(z, w)| (z, w / total)).collect() }
        }
        other => other,
    }
}

fn toml_floats(v: &[f64]) -> String {
    format!("[{}]", v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(", "))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn parse_serialize_parse_is_identity(
        generator in arb_generator(),
        mixing in arb_mixing(),
        mu in prop::collection::vec(-5.0f64..5.0, 2),
        diag in prop::collection::vec(0.5f64..3.0, 2),
        off in -0.4f64..0.4,
        seed in 0u64..(1 << 62),
        with_mc in any::<bool>(),
    ) {
        let mixing = normalize(mixing);
        let mix_toml = toml::to_string(&toml::Table::try_from(&mixing).unwrap()).unwrap();
        let gen_toml = toml::to_string(&toml::Table::try_from(generator).unwrap()).unwrap();
        let inline = |t: &str| format!("{{ {} }}", t.trim().lines().collect::<Vec<_>>().join(", "));
        let block = |name: &str, shift: f64| format!(
            "[{name}]\nmu = {}\nsigma = [[{:?}, {off:?}], [{off:?}, {:?}]]\ndelta = [0.1, -0.2]\ngenerator = {}\nalpha = \"sqrt_z\"\nbeta = \"identity\"\nmixing = {}\n",
            toml_floats(&[mu[0] + shift, mu[1]]), diag[0], diag[1], inline(&gen_toml), inline(&mix_toml),
        );
        let mut text = format!("seed = {seed}\norders = [\"st\", \"cx\", \"uo\"]\n{}\n{}", block("d1", 0.0), block("d2", 0.5));
        if with_mc {
            text.push_str("\n[mc]\nsamples = 20000\ngrid = [-1.0, 0.5, 2.0]\ncoupled = false\ndirection = [1.0, -1.0]\n");
        }
        let first = match parse_scenario(&text) {
            Ok(s) => s,
            // Some generated maps do not fit the mixing law; they must fail cleanly.
            Err(CliError::Spec { .. }) => return Ok(()),
            Err(e) => panic!("{e}\n{text}"),
        };
        let again = parse_scenario(&first.to_toml().unwrap()).unwrap();
        prop_assert_eq!(first, again);
    }
}
