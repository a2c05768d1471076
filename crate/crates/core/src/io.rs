//! CSV artifacts. All numbers use Rust's locale-independent `Display`
//! formatting and `\n` line endings.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::diffusion::Trajectory;
use crate::error::Result;
use crate::kinetic::Snapshot;
use crate::model::Grid1D;

pub fn snapshot_path(dir: &Path, step: usize) -> PathBuf {
    dir.join(format!("fields_{step:08}.csv"))
}

pub fn write_kinetic_fields<W: Write>(
    mut w: W,
    snap: &Snapshot,
    grid: &Grid1D,
    epsilon: f64,
) -> std::io::Result<()> {
    writeln!(w, "x,u,v,rho,j")?;
    let s = &snap.state;
    for i in 0..grid.nx() {
        let (u, v) = (s.u[i], s.v[i]);
        writeln!(
            w,
            "{},{},{},{},{}",
            grid.center(i),
            u,
            v,
            u + v,
            (u - v) / epsilon
        )?;
    }
    Ok(())
}

pub fn write_rho_fields<W: Write>(mut w: W, rho: &[f64], grid: &Grid1D) -> std::io::Result<()> {
    writeln!(w, "x,rho")?;
    for (i, r) in rho.iter().enumerate() {
        writeln!(w, "{},{}", grid.center(i), r)?;
    }
    Ok(())
}

/// Writes one `fields_{step:08}.csv` per snapshot into `dir`.
pub fn write_kinetic_snapshots(
    dir: &Path,
    snaps: &[Snapshot],
    grid: &Grid1D,
    epsilon: f64,
) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    for snap in snaps {
        let f = BufWriter::new(File::create(snapshot_path(dir, snap.step))?);
        write_kinetic_fields(f, snap, grid, epsilon)?;
    }
    Ok(())
}

/// Writes the recorded diffusion states, labelled by their position in the
/// trajectory times `stride` (the step index when recorded at that stride).
pub fn write_diffusion_snapshots(dir: &Path, traj: &Trajectory, stride: usize) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    for (k, rho) in traj.rho.iter().enumerate() {
        let f = BufWriter::new(File::create(snapshot_path(dir, k * stride))?);
        write_rho_fields(f, rho, &traj.grid)?;
    }
    Ok(())
}

pub fn create_file(path: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}
