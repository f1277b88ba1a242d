//! Plain-text checkpoint format: a header, the layer sizes, then one line
//! per tensor with row-major values. Values are printed with Rust's
//! shortest round-trip formatting, so save/load is bit-exact.

use nalgebra::{DMatrix, DVector};

use super::mlp::MlpParameters;
use super::AgentError;

const MAGIC: &str = "mlp-checkpoint v1";

pub fn save_checkpoint(params: &MlpParameters) -> String {
    let (n_i, h1, h2, n_o) = params.dims();
    let mut out = String::new();
    out.push_str(MAGIC);
    out.push('\n');
    out.push_str(&format!("dims {n_i} {h1} {h2} {n_o}\n"));
    let mut tensor = |name: &str, values: Vec<f64>| {
        out.push_str(name);
        for v in values {
            out.push(' ');
            out.push_str(&format!("{v}"));
        }
        out.push('\n');
    };
    // row-major matrix dumps
    let rows = |m: &DMatrix<f64>| -> Vec<f64> {
        (0..m.nrows())
            .flat_map(|r| (0..m.ncols()).map(move |c| (r, c)))
            .map(|(r, c)| m[(r, c)])
            .collect()
    };
    tensor("w1", rows(&params.w1));
    tensor("b1", params.b1.iter().copied().collect());
    tensor("w2", rows(&params.w2));
    tensor("b2", params.b2.iter().copied().collect());
    tensor("w3", rows(&params.w3));
    tensor("b3", params.b3.iter().copied().collect());
    out
}

pub fn load_checkpoint(text: &str) -> Result<MlpParameters, AgentError> {
    let mut lines = text.lines();
    let bad = |msg: &str| AgentError::Checkpoint(msg.to_string());
    if lines.next().map(str::trim) != Some(MAGIC) {
        return Err(bad("missing or unsupported header"));
    }
    let dims_line = lines.next().ok_or_else(|| bad("missing dims"))?;
    let dims: Vec<usize> = dims_line
        .strip_prefix("dims ")
        .ok_or_else(|| bad("malformed dims"))?
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| bad("malformed dims")))
        .collect::<Result<_, _>>()?;
    let [n_i, h1, h2, n_o]: [usize; 4] = dims
        .try_into()
        .map_err(|_| bad("dims must have four entries"))?;

    let mut read_tensor = |name: &str, len: usize| -> Result<Vec<f64>, AgentError> {
        let line = lines.next().ok_or_else(|| bad("missing tensor"))?;
        let rest = line
            .strip_prefix(name)
            .ok_or_else(|| bad(&format!("expected tensor {name}")))?;
        let values: Vec<f64> = rest
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| bad("bad value")))
            .collect::<Result<_, _>>()?;
        if values.len() != len {
            return Err(bad(&format!(
                "tensor {name}: expected {len} values, found {}",
                values.len()
            )));
        }
        Ok(values)
    };

    let w1 = read_tensor("w1", h1 * n_i)?;
    let b1 = read_tensor("b1", h1)?;
    let w2 = read_tensor("w2", h2 * h1)?;
    let b2 = read_tensor("b2", h2)?;
    let w3 = read_tensor("w3", n_o * h2)?;
    let b3 = read_tensor("b3", n_o)?;

    Ok(MlpParameters {
        w1: DMatrix::from_row_slice(h1, n_i, &w1),
        b1: DVector::from_vec(b1),
        w2: DMatrix::from_row_slice(h2, h1, &w2),
        b2: DVector::from_vec(b2),
        w3: DMatrix::from_row_slice(n_o, h2, &w3),
        b3: DVector::from_vec(b3),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn roundtrip_is_bit_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let params = MlpParameters::init(7, 5, 4, 3, &mut rng);
        let text = save_checkpoint(&params);
        let loaded = load_checkpoint(&text).unwrap();
        assert_eq!(params, loaded);
    }

    #[test]
    fn rejects_malformed_input() {
        assert!(load_checkpoint("").is_err());
        assert!(load_checkpoint("mlp-checkpoint v1\ndims 2 2 2").is_err());
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let params = MlpParameters::init(3, 2, 2, 2, &mut rng);
        let text = save_checkpoint(&params);
        let truncated: String = text.lines().take(4).collect::<Vec<_>>().join("\n");
        assert!(load_checkpoint(&truncated).is_err());
    }
}
