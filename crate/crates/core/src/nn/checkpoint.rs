//! Parameter files: one text header line naming the spec, then every parameter
//! as a little-endian f64 in flat order (per layer, weights row-major, then biases).

use std::io::{BufRead, Write};

use crate::error::{Error, Result};

use super::{MlpParams, MlpSpec};

pub fn write_params<W: Write>(mut out: W, spec: &MlpSpec, params: &MlpParams) -> Result<()> {
    if !params.matches(spec) {
        return Err(Error::Format("parameters do not match spec".into()));
    }
    writeln!(out, "{}", spec.header())?;
    for v in params.iter() {
        out.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_params<R: BufRead>(mut input: R) -> Result<(MlpSpec, MlpParams)> {
    let mut header = String::new();
    input.read_line(&mut header)?;
    let spec = MlpSpec::parse_header(header.trim_end_matches('\n'))?;
    let mut params = MlpParams::zeros(&spec);
    let mut buf = [0u8; 8];
    for v in params.iter_mut() {
        input
            .read_exact(&mut buf)
            .map_err(|_| Error::Format("truncated parameter payload".into()))?;
        *v = f64::from_le_bytes(buf);
    }
    let mut rest = Vec::new();
    input.read_to_end(&mut rest)?;
    if !rest.is_empty() {
        return Err(Error::Format(format!("{} trailing bytes", rest.len())));
    }
    Ok((spec, params))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{init_params, Activation};

    #[test]
    fn round_trip_and_header() {
        let spec = MlpSpec::new(vec![10, 5, 5], vec![Activation::Relu, Activation::Relu]).unwrap();
        let p = init_params(&spec, 3);
        let mut buf = Vec::new();
        write_params(&mut buf, &spec, &p).unwrap();
        assert!(buf.starts_with(b"dims=10,5,5;act=relu,relu\n"));
        assert_eq!(buf.len(), 26 + 8 * p.len());
        let (s2, p2) = read_params(&buf[..]).unwrap();
        assert_eq!((s2, p2), (spec, p));
        assert!(read_params(&buf[..buf.len() - 1]).is_err());
    }
}
