//! Solution bundle on disk. Labels in files are 1-based.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::Reconciliation;
use crate::error::Result;

/// Contents of `solution.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolutionBundle {
    pub label_base: usize,
    #[serde(flatten)]
    pub reconciliation: Reconciliation,
}

fn shift(r: &mut Reconciliation, up: bool) {
    let f = |x: &mut usize| *x = if up { *x + 1 } else { *x - 1 };
    r.solution.c_hat.iter_mut().for_each(f);
    for g in r.solution.groups.iter_mut() {
        g.s_hat.iter_mut().for_each(f);
    }
}

/// Writes `solution.json`, `Z_hat_<g>.csv` per network cluster,
/// `transforms.csv`, `cross_chain_ari.csv` and `discarded_chains.csv`.
pub fn write_solution_bundle(dir: &Path, rec: &Reconciliation) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut r = rec.clone();
    shift(&mut r, true);
    let transforms = std::mem::take(&mut r.solution.transforms);
    fs::write(dir.join("solution.json"), serde_json::to_string_pretty(&SolutionBundle { label_base: 1, reconciliation: r })?)?;

    for (g, gs) in rec.solution.groups.iter().enumerate() {
        let mut w = csv::Writer::from_path(dir.join(format!("Z_hat_{}.csv", g + 1)))?;
        w.write_record(["node", "z1", "z2", "cluster"])?;
        for (i, (p, s)) in gs.z_hat.iter().zip(&gs.s_hat).enumerate() {
            w.write_record([(i + 1).to_string(), format!("{:?}", p[0]), format!("{:?}", p[1]), (s + 1).to_string()])?;
        }
        w.flush()?;
    }

    let mut w = csv::Writer::from_path(dir.join("transforms.csv"))?;
    w.write_record(["group", "iteration", "r11", "r12", "r21", "r22", "scale", "t1", "t2", "residual"])?;
    for t in &transforms {
        let r = t.transform.rotation;
        let mut rec = vec![(t.group + 1).to_string(), t.iteration.to_string()];
        rec.extend([r[0][0], r[0][1], r[1][0], r[1][1], t.transform.scale].iter().map(|v| format!("{v:?}")));
        rec.extend(t.transform.translation.iter().map(|v| format!("{v:?}")));
        rec.push(format!("{:?}", t.residual));
        w.write_record(&rec)?;
    }
    w.flush()?;

    let mut w = csv::Writer::from_path(dir.join("cross_chain_ari.csv"))?;
    w.write_record(["selected_chain", "other_chain", "ari"])?;
    for (c, a) in &rec.cross_chain_ari {
        w.write_record([rec.selected_chain.to_string(), c.to_string(), format!("{a:?}")])?;
    }
    w.flush()?;

    let mut w = csv::Writer::from_path(dir.join("discarded_chains.csv"))?;
    w.write_record(["chain", "reason"])?;
    for d in &rec.discarded {
        w.write_record([d.chain.to_string(), d.reason.clone()])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads `solution.json` back with 0-based labels. Per-iteration transforms
/// are not part of the file.
pub fn read_solution(path: &Path) -> Result<Reconciliation> {
    let text = fs::read_to_string(path)?;
    let bundle: SolutionBundle = serde_json::from_str(&text)?;
    let mut r = bundle.reconciliation;
    if bundle.label_base == 1 {
        shift(&mut r, false);
    }
    Ok(r)
}
