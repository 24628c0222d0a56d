//! Parsing of the compact command-line forms of models, grids and index lists.

use std::path::Path;

use sprinkle::kernels::CovarianceModel;
use sprinkle::{Error, Result};

pub const MODEL_FORMS: &str =
    "iid, bargmann-fock, gff:<dim>, cauchy:<alpha>, wave:<dim>, polylog:<c>,<gamma>, matrix:<file.csv>";

fn numbers(args: &str, what: &str) -> Result<Vec<f64>> {
    args.split(',')
        .map(|a| a.trim().parse::<f64>().map_err(|_| Error::Config(format!("bad number {a:?} in {what:?}"))))
        .collect()
}

fn dimension(arg: &str, what: &str) -> Result<usize> {
    arg.trim().parse().map_err(|_| Error::Config(format!("bad dimension {arg:?} in {what:?}")))
}

pub fn parse_model(s: &str) -> Result<CovarianceModel> {
    let (name, args) = s.split_once(':').unwrap_or((s, ""));
    let want = |k: usize| -> Result<Vec<f64>> {
        let v = if args.is_empty() { Vec::new() } else { numbers(args, s)? };
        if v.len() == k {
            Ok(v)
        } else {
            Err(Error::Config(format!("model {name:?} takes {k} parameter(s)")))
        }
    };
    let model = match name {
        "iid" => CovarianceModel::IidStandard,
        "bargmann-fock" | "bf" => CovarianceModel::BargmannFock,
        "gff" => CovarianceModel::Gff { dim: dimension(args, s)? },
        "cauchy" => CovarianceModel::Cauchy { alpha: want(1)?[0] },
        "wave" => CovarianceModel::MonochromaticWave { dim: dimension(args, s)? },
        "polylog" => {
            let v = want(2)?;
            CovarianceModel::PolylogDecay { c: v[0], gamma: v[1] }
        }
        "matrix" => CovarianceModel::ExplicitMatrix { matrix: read_matrix(Path::new(args))? },
        _ => return Err(Error::Config(format!("unknown model {name:?}; valid: {MODEL_FORMS}"))),
    };
    model.validate()?;
    Ok(model)
}

/// Headerless CSV, one matrix row per line.
pub fn read_matrix(path: &Path) -> Result<Vec<Vec<f64>>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_path(path).map_err(csv_err)?;
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_err)?;
        let row = rec
            .iter()
            .map(|x| x.parse::<f64>().map_err(|_| Error::Config(format!("bad matrix entry {x:?} in {}", path.display()))))
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok(rows)
}

pub fn csv_err(e: csv::Error) -> Error {
    if e.is_io_error() {
        if let csv::ErrorKind::Io(io) = e.into_kind() {
            return Error::Io(io);
        }
        unreachable!("is_io_error implies an Io kind");
    }
    Error::Config(format!("csv: {e}"))
}

/// `32x32` or `64`.
pub fn parse_shape(s: &str) -> Result<Vec<usize>> {
    s.split('x')
        .map(|p| p.trim().parse::<usize>().map_err(|_| Error::Config(format!("bad grid shape {s:?}; use e.g. 32x32"))))
        .collect()
}

/// `0,1,5` or ranges `0-3,7`.
pub fn parse_indices(s: &str) -> Result<Vec<usize>> {
    let bad = || Error::Config(format!("bad index list {s:?}; use e.g. 0,1,4-7"));
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        match part.split_once('-') {
            Some((a, b)) => {
                let (a, b): (usize, usize) = (a.parse().map_err(|_| bad())?, b.parse().map_err(|_| bad())?);
                if a > b {
                    return Err(bad());
                }
                out.extend(a..=b);
            }
            None => out.push(part.parse().map_err(|_| bad())?),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn model_forms() {
        assert_eq!(parse_model("gff:3").unwrap(), CovarianceModel::Gff { dim: 3 });
        assert_eq!(parse_model("bf").unwrap(), CovarianceModel::BargmannFock);
        assert_eq!(parse_model("polylog:1,2.5").unwrap(), CovarianceModel::PolylogDecay { c: 1.0, gamma: 2.5 });
        let err = parse_model("brownian").unwrap_err().to_string();
        assert!(err.contains("gff:<dim>"), "{err}");
        assert!(parse_model("cauchy").is_err());
    }

    #[test]
    fn lists_and_shapes() {
        assert_eq!(parse_indices("0,2-4").unwrap(), vec![0, 2, 3, 4]);
        assert!(parse_indices("3-1").is_err());
        assert_eq!(parse_shape("32x16").unwrap(), vec![32, 16]);
    }
}
