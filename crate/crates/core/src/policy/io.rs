use std::fmt::Write as _;
use std::path::Path;

use super::gaussian::GaussianPolicy;
use super::mlp::{Layer, MlpParams};
use crate::error::LoadError;
use crate::{Error, Result};

pub const FORMAT_VERSION: u32 = 1;
const MAGIC: &str = "auroraparams";

fn push_reals(out: &mut String, tag: &str, values: &[f64]) {
    out.push_str(tag);
    for v in values {
        write!(out, " {v:.16e}").expect("write to String");
    }
    out.push('\n');
}

fn render_net(out: &mut String, name: &str, net: &MlpParams) {
    writeln!(out, "net {name}").expect("write to String");
    out.push_str("dims");
    for d in net.dims() {
        write!(out, " {d}").expect("write to String");
    }
    out.push('\n');
    for l in net.layers() {
        push_reals(out, "w", &l.weights);
    }
    for l in net.layers() {
        push_reals(out, "b", &l.biases);
    }
}

/// The policy in the versioned text format.
pub fn render_params(policy: &GaussianPolicy) -> String {
    let mut out = String::new();
    writeln!(out, "{MAGIC} v{FORMAT_VERSION}").expect("write to String");
    writeln!(out, "k {}", policy.k()).expect("write to String");
    render_net(&mut out, "mean", &policy.mean_net);
    render_net(&mut out, "value", &policy.value_net);
    writeln!(out, "logstd {:.16e}", policy.log_std()).expect("write to String");
    out
}

pub fn save_params(policy: &GaussianPolicy, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, render_params(policy)).map_err(|e| Error::io(path, e))
}

pub fn load_params(path: impl AsRef<Path>) -> Result<GaussianPolicy> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(parse_params(&text)?)
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> Lines<'a> {
    /// Next line, split into its tag and the remaining fields.
    fn expect(&mut self, tag: &str, section: &str) -> Result<(usize, Vec<&'a str>), LoadError> {
        let (idx, line) = self
            .inner
            .next()
            .ok_or_else(|| LoadError::MissingSection(section.to_string()))?;
        let mut fields = line.split_whitespace();
        match fields.next() {
            Some(t) if t == tag => Ok((idx + 1, fields.collect())),
            other => Err(LoadError::Malformed {
                line: idx + 1,
                msg: format!("expected `{tag}`, found `{}`", other.unwrap_or("")),
            }),
        }
    }
}

fn parse_reals(line: usize, fields: &[&str]) -> Result<Vec<f64>, LoadError> {
    fields
        .iter()
        .map(|f| match f.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => Err(LoadError::Malformed {
                line,
                msg: format!("`{f}` is not a finite real"),
            }),
        })
        .collect()
}

fn parse_net(lines: &mut Lines<'_>, name: &str, k: usize) -> Result<MlpParams, LoadError> {
    let (line, fields) = lines.expect("net", &format!("net {name}"))?;
    if fields != [name] {
        return Err(LoadError::Malformed {
            line,
            msg: format!("expected `net {name}`"),
        });
    }
    let (line, fields) = lines.expect("dims", &format!("{name} dims"))?;
    let dims = fields
        .iter()
        .map(|f| f.parse::<usize>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|_| LoadError::Malformed {
            line,
            msg: "dims must be non-negative integers".into(),
        })?;
    if dims.len() < 2 || dims.contains(&0) {
        return Err(LoadError::Dimension(format!("{name} network has dims {dims:?}")));
    }
    if dims[0] != 3 * k || dims[dims.len() - 1] != 1 {
        return Err(LoadError::Dimension(format!(
            "{name} network dims {dims:?} do not fit k = {k}"
        )));
    }
    let n = dims.len() - 1;
    let mut weights = Vec::with_capacity(n);
    for i in 0..n {
        let (line, fields) = lines.expect("w", &format!("{name} weights {i}"))?;
        let w = parse_reals(line, &fields)?;
        if w.len() != dims[i] * dims[i + 1] {
            return Err(LoadError::Dimension(format!(
                "{name} layer {i}: {} weights for a {}x{} matrix",
                w.len(),
                dims[i + 1],
                dims[i]
            )));
        }
        weights.push(w);
    }
    let mut layers = Vec::with_capacity(n);
    for (i, w) in weights.into_iter().enumerate() {
        let (line, fields) = lines.expect("b", &format!("{name} biases {i}"))?;
        let b = parse_reals(line, &fields)?;
        if b.len() != dims[i + 1] {
            return Err(LoadError::Dimension(format!(
                "{name} layer {i}: {} biases for {} outputs",
                b.len(),
                dims[i + 1]
            )));
        }
        layers.push(Layer {
            weights: w,
            biases: b,
        });
    }
    MlpParams::new(dims, layers).map_err(|e| LoadError::Dimension(e.to_string()))
}

/// Parses the text format produced by [`render_params`].
pub fn parse_params(text: &str) -> Result<GaussianPolicy, LoadError> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
    };
    let (line, fields) = lines.expect(MAGIC, "header")?;
    let version = match fields.as_slice() {
        [v] => v.strip_prefix('v').unwrap_or(v),
        _ => {
            return Err(LoadError::Malformed {
                line,
                msg: "header must be `auroraparams v<version>`".into(),
            })
        }
    };
    if version.parse::<u32>().ok() != Some(FORMAT_VERSION) {
        return Err(LoadError::Version {
            found: version.to_string(),
            expected: FORMAT_VERSION,
        });
    }
    let (line, fields) = lines.expect("k", "k")?;
    let k = match fields.as_slice() {
        [v] => v.parse::<usize>().ok().filter(|&k| k > 0),
        _ => None,
    }
    .ok_or_else(|| LoadError::Malformed {
        line,
        msg: "k must be a positive integer".into(),
    })?;
    let mean_net = parse_net(&mut lines, "mean", k)?;
    let value_net = parse_net(&mut lines, "value", k)?;
    let (line, fields) = lines.expect("logstd", "logstd")?;
    let log_std = match parse_reals(line, &fields)?.as_slice() {
        [v] => *v,
        _ => {
            return Err(LoadError::Malformed {
                line,
                msg: "logstd takes one value".into(),
            })
        }
    };
    if let Some((idx, extra)) = lines.inner.find(|(_, l)| !l.trim().is_empty()) {
        return Err(LoadError::Malformed {
            line: idx + 1,
            msg: format!("unexpected trailing content `{extra}`"),
        });
    }
    GaussianPolicy::from_parts(k, mean_net, value_net, log_std)
        .map_err(|e| LoadError::Dimension(e.to_string()))
}
