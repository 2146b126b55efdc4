//! Versioned binary checkpoint format for [`DenseNet`].
//!
//! Layout, all integers and floats little-endian:
//!
//! ```text
//! magic        4 bytes  "DNET"
//! version      u32      currently 1
//! num_sizes    u32      number of entries in layer_sizes (layers + 1)
//! layer_sizes  u32 * num_sizes
//! hidden       u8       0 = relu, 1 = tanh
//! output       u8       0 = linear, 1 = softmax
//! per layer    f64 * (outputs * inputs) row-major weights, then f64 * outputs biases
//! ```

use super::{DenseNet, HiddenActivation, OutputActivation};
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"DNET";
pub const FORMAT_VERSION: u32 = 1;

impl DenseNet {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(16 + 8 * self.param_count());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.layer_sizes.len() as u32).to_le_bytes());
        for &s in &self.layer_sizes {
            out.extend_from_slice(&(s as u32).to_le_bytes());
        }
        out.push(match self.hidden_activation {
            HiddenActivation::Relu => 0,
            HiddenActivation::Tanh => 1,
        });
        out.push(match self.output_activation {
            OutputActivation::Linear => 0,
            OutputActivation::Softmax => 1,
        });
        for p in self.params() {
            out.extend_from_slice(&p.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(4)? != MAGIC {
            return Err(Error::format("not a DNET checkpoint"));
        }
        let version = r.u32()?;
        if version != FORMAT_VERSION {
            return Err(Error::format(format!("unsupported DNET version {version}")));
        }
        let n = r.u32()? as usize;
        if n > 1024 {
            return Err(Error::format("implausible layer count"));
        }
        let sizes = (0..n)
            .map(|_| r.u32().map(|s| s as usize))
            .collect::<Result<Vec<_>>>()?;
        let hidden = match r.take(1)?[0] {
            0 => HiddenActivation::Relu,
            1 => HiddenActivation::Tanh,
            b => return Err(Error::format(format!("unknown hidden activation code {b}"))),
        };
        let output = match r.take(1)?[0] {
            0 => OutputActivation::Linear,
            1 => OutputActivation::Softmax,
            b => return Err(Error::format(format!("unknown output activation code {b}"))),
        };
        let mut net = DenseNet::zeros(&sizes, hidden, output).map_err(|e| Error::format(e.to_string()))?;
        for layer in &mut net.layers {
            for w in layer.weights.iter_mut().chain(layer.biases.iter_mut()) {
                *w = f64::from_le_bytes(r.take(8)?.try_into().unwrap());
            }
        }
        if r.pos != bytes.len() {
            return Err(Error::format("trailing bytes after DNET parameters"));
        }
        if !net.all_finite() {
            return Err(Error::format("checkpoint contains non-finite parameters"));
        }
        Ok(net)
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos + n;
        if end > self.bytes.len() {
            return Err(Error::format("truncated DNET checkpoint"));
        }
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn header_layout() {
        let net = DenseNet::zeros(&[2, 3], HiddenActivation::Tanh, OutputActivation::Softmax)
            .unwrap();
        let bytes = net.to_bytes();
        assert_eq!(&bytes[..4], b"DNET");
        assert_eq!(&bytes[4..8], &1u32.to_le_bytes());
        assert_eq!(&bytes[8..12], &2u32.to_le_bytes());
        assert_eq!(bytes[20], 1);
        assert_eq!(bytes[21], 1);
        assert_eq!(bytes.len(), 22 + 8 * 9);
    }

    #[test]
    fn rejects_corruption() {
        let net = DenseNet::zeros(&[2, 3], HiddenActivation::Relu, OutputActivation::Linear)
            .unwrap();
        let bytes = net.to_bytes();
        assert!(DenseNet::from_bytes(&bytes[..bytes.len() - 1]).is_err());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(DenseNet::from_bytes(&bad).is_err());
        let mut extra = bytes;
        extra.push(0);
        assert!(DenseNet::from_bytes(&extra).is_err());
    }

    proptest! {
        #[test]
        fn roundtrip(seed in any::<u64>(), hidden in 1usize..12, tanh in any::<bool>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let act = if tanh { HiddenActivation::Tanh } else { HiddenActivation::Relu };
            let net = DenseNet::new(&[3, hidden, 2], act, OutputActivation::Linear, &mut rng).unwrap();
            let back = DenseNet::from_bytes(&net.to_bytes()).unwrap();
            prop_assert_eq!(back, net);
        }
    }
}
