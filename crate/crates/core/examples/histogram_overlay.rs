//! Replicated direct-effect estimates on the constant graphon, written as CSV with Gaussian overlays.

use spillover::estimators::EstimatorKind;
use spillover::harness::{histogram_export, io, run_replications, OutputPaths, RunConfig};

fn main() -> spillover::Result<()> {
    let mut cfg = RunConfig::for_preset("figure2_constant", vec![1000], 200, 5);
    cfg.estimators = vec![EstimatorKind::HtDir, EstimatorKind::HajDir];
    let table = run_replications(&cfg)?;

    let dir = std::env::temp_dir().join("spillover-histogram");
    let paths = OutputPaths::default().under(&dir);
    io::write_table(&table, &paths)?;
    for name in ["ht_dir", "haj_dir"] {
        let h = histogram_export(&table, name, None, 25)?;
        let out = dir.join(format!("{name}_hist.csv"));
        io::write_csv(&out, &h.bins, &io::HISTOGRAM_COLUMNS)?;
        io::write_json(&out.with_extension("json"), &h.overlay)?;
        let o = &h.overlay;
        println!(
            "{name}: empirical sd {:.4}, predicted {:.4}, naive {:.4}",
            o.empirical.sd,
            o.full.map_or(f64::NAN, |g| g.sd),
            o.naive.map_or(f64::NAN, |g| g.sd)
        );
    }
    println!("files in {}", dir.display());
    Ok(())
}
