//! Network and path JSON, and the per-OD CSV tables.

use std::fs;
use std::path::Path;

use odcal_core::{
    Network, OdPair, OdVector, PathSet, Segment, SegmentId, SimResult, Zone, ZoneId,
};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Serialize, Deserialize)]
struct NetworkFile {
    segments: Vec<SegmentRecord>,
    zones: Vec<ZoneRecord>,
}

#[derive(Serialize, Deserialize)]
struct SegmentRecord {
    id: u32,
    length_m: f64,
    lanes: u32,
    v_max_mps: f64,
    capacity_per_lane_vph: f64,
    successors: Vec<u32>,
}

#[derive(Serialize, Deserialize)]
struct ZoneRecord {
    id: u32,
    entry_segment: u32,
    exit_segment: u32,
}

#[derive(Serialize, Deserialize)]
struct PathRecord {
    od: [u32; 2],
    segments: Vec<u32>,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn json_error(path: &Path) -> impl FnOnce(serde_json::Error) -> Error + '_ {
    move |source| Error::Json { path: path.to_path_buf(), source }
}

/// Parses a network; segments may be listed in any order but their ids must
/// be exactly `0..n`.
pub fn parse_network(json: &str) -> std::result::Result<Network, NetworkJsonError> {
    let mut file: NetworkFile = serde_json::from_str(json)?;
    file.segments.sort_by_key(|s| s.id);
    let successors = file
        .segments
        .iter()
        .map(|s| s.successors.iter().map(|&i| SegmentId(i)).collect())
        .collect();
    let segments = file
        .segments
        .iter()
        .map(|s| Segment {
            id: SegmentId(s.id),
            length_m: s.length_m,
            lanes: s.lanes,
            v_max_mps: s.v_max_mps,
            capacity_per_lane_vph: s.capacity_per_lane_vph,
        })
        .collect();
    let zones = file
        .zones
        .iter()
        .map(|z| Zone { id: ZoneId(z.id), entry: SegmentId(z.entry_segment), exit: SegmentId(z.exit_segment) })
        .collect();
    Ok(Network::new(segments, successors, zones)?)
}

#[derive(Debug, thiserror::Error)]
pub enum NetworkJsonError {
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Network(#[from] odcal_core::NetworkError),
}

pub fn network_to_json(net: &Network) -> String {
    let file = NetworkFile {
        segments: net
            .segments()
            .iter()
            .map(|s| SegmentRecord {
                id: s.id.0,
                length_m: s.length_m,
                lanes: s.lanes,
                v_max_mps: s.v_max_mps,
                capacity_per_lane_vph: s.capacity_per_lane_vph,
                successors: net.successors(s.id).iter().map(|i| i.0).collect(),
            })
            .collect(),
        zones: net
            .zones()
            .iter()
            .map(|z| ZoneRecord { id: z.id.0, entry_segment: z.entry.0, exit_segment: z.exit.0 })
            .collect(),
    };
    serde_json::to_string_pretty(&file).expect("network serializes")
}

pub fn load_network(path: &Path) -> Result<Network> {
    parse_network(&read(path)?).map_err(|e| match e {
        NetworkJsonError::Json(source) => Error::Json { path: path.to_path_buf(), source },
        NetworkJsonError::Network(e) => Error::Network(e),
    })
}

pub fn save_network(path: &Path, net: &Network) -> Result<()> {
    write(path, &network_to_json(net))
}

/// Loads routes and validates them against `net`.
pub fn load_paths(path: &Path, net: &Network) -> Result<PathSet> {
    let records: Vec<PathRecord> = serde_json::from_str(&read(path)?).map_err(json_error(path))?;
    let (pairs, routes) = records
        .into_iter()
        .map(|r| {
            (
                OdPair::new(ZoneId(r.od[0]), ZoneId(r.od[1])),
                r.segments.into_iter().map(SegmentId).collect::<Vec<_>>(),
            )
        })
        .unzip();
    Ok(PathSet::new(net, pairs, routes)?)
}

pub fn save_paths(path: &Path, paths: &PathSet) -> Result<()> {
    let records: Vec<PathRecord> = paths
        .od_pairs()
        .iter()
        .zip(paths.routes())
        .map(|(od, route)| PathRecord {
            od: [od.origin.0, od.destination.0],
            segments: route.iter().map(|s| s.0).collect(),
        })
        .collect();
    write(path, &serde_json::to_string_pretty(&records).expect("paths serialize"))
}

/// Shortest round-trip decimal form; identical inputs give identical bytes.
pub fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

/// Writes a header and rows of preformatted fields.
pub fn write_csv(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
    w.write_record(header).map_err(|e| Error::csv(path, e))?;
    for row in rows {
        w.write_record(&row).map_err(|e| Error::csv(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads a two-column `od_index,<value>` table whose indices are `0..n` in
/// order.
fn read_od_column(path: &Path, value: &str) -> Result<Vec<f64>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
    let headers = r.headers().map_err(|e| Error::csv(path, e))?.clone();
    if headers.len() != 2 || &headers[0] != "od_index" || &headers[1] != value {
        return Err(Error::Invalid(format!("{}: expected header `od_index,{value}`", path.display())));
    }
    let mut out = Vec::new();
    for (row, rec) in r.deserialize::<(usize, f64)>().enumerate() {
        let (idx, v) = rec.map_err(|e| Error::csv(path, e))?;
        if idx != row {
            return Err(Error::Invalid(format!(
                "{}: row {} has od_index {idx}; indices must run 0..n in order",
                path.display(),
                row + 1
            )));
        }
        out.push(v);
    }
    Ok(out)
}

fn write_od_column(path: &Path, value: &str, values: &[f64]) -> Result<()> {
    write_csv(
        path,
        &["od_index", value],
        values.iter().enumerate().map(|(i, v)| vec![i.to_string(), fmt_f64(*v)]),
    )
}

pub fn load_ground_truth(path: &Path) -> Result<Vec<f64>> {
    read_od_column(path, "gt_eta_s")
}

pub fn save_ground_truth(path: &Path, gt: &[f64]) -> Result<()> {
    write_od_column(path, "gt_eta_s", gt)
}

pub fn load_demand(path: &Path) -> Result<OdVector> {
    Ok(OdVector::new(read_od_column(path, "demand_vph")?))
}

pub fn save_demand(path: &Path, x: &OdVector) -> Result<()> {
    write_od_column(path, "demand_vph", x.as_slice())
}

pub fn save_sim_result(path: &Path, r: &SimResult) -> Result<()> {
    write_csv(
        path,
        &["od_index", "mean_eta_s", "eta_var_s2", "completed", "generated"],
        (0..r.mean_eta_s.len()).map(|p| {
            vec![
                p.to_string(),
                fmt_f64(r.mean_eta_s[p]),
                fmt_f64(r.eta_var_s2[p]),
                r.completed[p].to_string(),
                r.generated[p].to_string(),
            ]
        }),
    )
}
