//! Plain-text checkpoints: network config, layer shapes, flat parameters,
//! epoch and shuffle-stream position.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::forcing::Rng;
use crate::opnet::network::{Network, NetworkConfig};

const MAGIC: &str = "galop-checkpoint 1";

#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub network: Network,
    pub epoch: usize,
    pub rng: Rng,
}

pub fn write_checkpoint(net: &Network, epoch: usize, rng: &Rng) -> String {
    let c = net.config();
    let mut out = String::new();
    let _ = writeln!(out, "{MAGIC}");
    let _ = writeln!(out, "input_encoding {}", c.input_encoding);
    let _ = writeln!(out, "input_dim {}", c.input_dim);
    let hidden: Vec<String> = c.hidden.iter().map(|w| w.to_string()).collect();
    let _ = writeln!(out, "hidden {}", hidden.join(" "));
    let _ = writeln!(out, "activation {}", c.activation);
    let _ = writeln!(out, "output_dim {}", c.output_dim);
    let _ = writeln!(out, "final_activation {}", c.final_activation);
    let _ = writeln!(out, "init_seed {}", c.init_seed);
    let _ = writeln!(out, "input_scale {:?}", c.input_scale);
    let _ = writeln!(out, "output_scale {:?}", c.output_scale);
    let _ = writeln!(out, "epoch {epoch}");
    let _ = writeln!(out, "rng {} {}", rng.seed(), rng.word_pos());
    for (i, o) in c.layer_shapes() {
        let _ = writeln!(out, "layer {i} {o}");
    }
    let _ = writeln!(out, "params {}", net.param_count());
    for p in net.params() {
        let _ = writeln!(out, "{p:?}");
    }
    out
}

pub fn save_checkpoint(path: impl AsRef<Path>, net: &Network, epoch: usize, rng: &Rng) -> Result<()> {
    std::fs::write(path, write_checkpoint(net, epoch, rng))?;
    Ok(())
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Checkpoint> {
    let path = path.as_ref();
    parse_checkpoint(&std::fs::read_to_string(path)?, path)
}

/// Load and require the stored network to have exactly the layer shapes of
/// `expected`.
pub fn load_checkpoint_for(path: impl AsRef<Path>, expected: &NetworkConfig) -> Result<Checkpoint> {
    let ck = load_checkpoint(path)?;
    let got = ck.network.config().layer_shapes();
    let want = expected.layer_shapes();
    if got != want {
        return Err(Error::invalid(format!(
            "checkpoint layer shapes {got:?} do not match the configured network {want:?}"
        )));
    }
    Ok(ck)
}

struct Lines<'a> {
    iter: std::iter::Enumerate<std::str::Lines<'a>>,
    origin: &'a Path,
    line: usize,
}

impl<'a> Lines<'a> {
    fn next_line(&mut self) -> Result<&'a str> {
        let (i, l) = self
            .iter
            .next()
            .ok_or_else(|| Error::parse(self.origin, self.line + 1, "unexpected end of file"))?;
        self.line = i + 1;
        Ok(l.trim())
    }

    fn field(&mut self, key: &str) -> Result<&'a str> {
        let l = self.next_line()?;
        match l.split_once(' ') {
            Some((k, v)) if k == key => Ok(v.trim()),
            _ if l == key => Ok(""),
            _ => Err(self.err(format!("expected `{key}`"))),
        }
    }

    fn parsed<T: std::str::FromStr>(&mut self, key: &str) -> Result<T> {
        let v = self.field(key)?;
        v.parse().map_err(|_| self.err(format!("bad value for `{key}`: `{v}`")))
    }

    fn err(&self, msg: impl Into<String>) -> Error {
        Error::parse(self.origin, self.line, msg)
    }
}

pub fn parse_checkpoint(text: &str, origin: impl AsRef<Path>) -> Result<Checkpoint> {
    let mut lines = Lines {
        iter: text.lines().enumerate(),
        origin: origin.as_ref(),
        line: 0,
    };
    if lines.next_line()? != MAGIC {
        return Err(lines.err("not a checkpoint file"));
    }
    let input_encoding = lines.field("input_encoding")?.parse().map_err(|e: Error| lines.err(e.to_string()))?;
    let input_dim = lines.parsed("input_dim")?;
    let hidden = lines
        .field("hidden")?
        .split_whitespace()
        .map(|w| w.parse::<usize>())
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|_| lines.err("bad hidden widths"))?;
    let activation = lines.field("activation")?.parse().map_err(|e: Error| lines.err(e.to_string()))?;
    let output_dim = lines.parsed("output_dim")?;
    let final_activation = lines
        .field("final_activation")?
        .parse()
        .map_err(|e: Error| lines.err(e.to_string()))?;
    let init_seed = lines.parsed("init_seed")?;
    let input_scale = lines.parsed("input_scale")?;
    let output_scale = lines.parsed("output_scale")?;
    let epoch = lines.parsed("epoch")?;
    let rng_line = lines.field("rng")?;
    let (seed, pos) = rng_line
        .split_once(' ')
        .and_then(|(s, p)| Some((s.parse::<u64>().ok()?, p.trim().parse::<u128>().ok()?)))
        .ok_or_else(|| lines.err("bad rng state"))?;
    let config = NetworkConfig {
        input_encoding,
        input_dim,
        hidden,
        activation,
        output_dim,
        final_activation,
        init_seed,
        input_scale,
        output_scale,
    };
    config.validate().map_err(|e| lines.err(e.to_string()))?;
    for (i, o) in config.layer_shapes() {
        let l = lines.field("layer")?;
        let dims: Vec<usize> = l.split_whitespace().filter_map(|v| v.parse().ok()).collect();
        if dims != [i, o] {
            return Err(lines.err(format!("layer shape `{l}` does not match the config ({i} {o})")));
        }
    }
    let count: usize = lines.parsed("params")?;
    if count != config.param_count() {
        return Err(lines.err(format!("{count} parameters, config needs {}", config.param_count())));
    }
    let mut params = Vec::with_capacity(count);
    for _ in 0..count {
        let l = lines.next_line()?;
        params.push(l.parse::<f64>().map_err(|_| lines.err(format!("bad parameter `{l}`")))?);
    }
    if let Some((i, l)) = lines.iter.find(|(_, l)| !l.trim().is_empty()) {
        return Err(Error::parse(lines.origin, i + 1, format!("trailing content `{}`", l.trim())));
    }
    let network = Network::from_params(config, params).map_err(|e| lines.err(e.to_string()))?;
    Ok(Checkpoint {
        network,
        epoch,
        rng: Rng::at_position(seed, pos),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::opnet::network::{Activation, FinalActivation, InputEncoding};

    fn net() -> Network {
        let mut c = NetworkConfig::new(InputEncoding::FAtDofs, 4, 3);
        c.hidden = vec![5, 2];
        c.activation = Activation::Swish;
        c.final_activation = FinalActivation::Bounded(4.0);
        c.init_seed = 9;
        c.output_scale = 0.25;
        Network::new(c).unwrap()
    }

    #[test]
    fn round_trip_is_exact() {
        let n = net();
        let mut rng = Rng::new(4);
        for _ in 0..7 {
            rng.next_u64();
        }
        let text = write_checkpoint(&n, 12, &rng);
        let ck = parse_checkpoint(&text, "ck").unwrap();
        assert_eq!(ck.network, n);
        assert_eq!(ck.epoch, 12);
        let mut a = ck.rng.clone();
        assert_eq!(a.next_u64(), rng.next_u64());
    }

    #[test]
    fn rejects_shape_mismatch() {
        let text = write_checkpoint(&net(), 0, &Rng::new(0));
        let bad = text.replacen("layer 5 2", "layer 5 3", 1);
        assert!(matches!(parse_checkpoint(&bad, "ck"), Err(Error::Parse { .. })));
        let short: String = text.lines().take(text.lines().count() - 1).map(|l| format!("{l}\n")).collect();
        assert!(parse_checkpoint(&short, "ck").is_err());

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("net.ckpt");
        save_checkpoint(&path, &net(), 3, &Rng::new(0)).unwrap();
        let mut other = net().config().clone();
        other.hidden = vec![5, 5];
        assert!(matches!(load_checkpoint_for(&path, &other), Err(Error::InvalidArgument(_))));
        assert!(load_checkpoint_for(&path, net().config()).is_ok());
    }
}
