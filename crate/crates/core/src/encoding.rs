//! Efficient coordinate vectors (ECV).
//!
//! Each axis is discretized into `bins` evenly spaced nodes from `min` to
//! `max` (both inclusive), so `bin_width = (max - min) / (bins - 1)`. A real
//! value is split linearly between its two neighbouring nodes: with
//! `u = (value - min) / bin_width`, `i = floor(u)` and `f = u - i`, node `i`
//! gets `1 - f` and node `i + 1` gets `f`. A value of exactly `max` is a
//! one-hot on the last node.
//!
//! Angles are mapped onto the unit circle and the resulting `(cos, sin)`
//! point is encoded on two `[-1, 1]` axes, so 359 degrees and 1 degree land
//! next to each other.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub name: String,
    pub min: f64,
    pub max: f64,
    pub bins: usize,
}

impl Axis {
    pub fn new(name: impl Into<String>, min: f64, max: f64, bins: usize) -> Result<Self> {
        let axis = Self {
            name: name.into(),
            min,
            max,
            bins,
        };
        axis.validate()?;
        Ok(axis)
    }

    /// Axis whose nodes sit `reduction_factor` units apart, e.g. a 0..200
    /// range reduced by 10 has nodes at 0, 10, ..., 200.
    pub fn reduced(name: impl Into<String>, min: f64, max: f64, reduction_factor: f64) -> Result<Self> {
        if !(reduction_factor > 0.0) {
            return Err(Error::config("reduction factor must be positive"));
        }
        let bins = ((max - min) / reduction_factor).round() as usize + 1;
        Self::new(name, min, max, bins)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.max > self.min) || !self.min.is_finite() || !self.max.is_finite() {
            return Err(Error::config(format!(
                "axis '{}' needs finite min < max, got [{}, {}]",
                self.name, self.min, self.max
            )));
        }
        if self.bins < 2 {
            return Err(Error::config(format!("axis '{}' needs at least 2 bins", self.name)));
        }
        Ok(())
    }

    pub fn bin_width(&self) -> f64 {
        (self.max - self.min) / (self.bins - 1) as f64
    }

    /// Left-edge coordinate of node `k`.
    pub fn node(&self, k: usize) -> f64 {
        self.min + k as f64 * self.bin_width()
    }

    pub fn clamp(&self, value: f64) -> f64 {
        value.clamp(self.min, self.max)
    }

    /// Writes this axis' segment into `out` (length `bins`, assumed zeroed).
    fn encode_into(&self, value: f64, out: &mut [f64]) -> Result<()> {
        if !(value >= self.min && value <= self.max) {
            return Err(Error::Range {
                axis: self.name.clone(),
                value,
                min: self.min,
                max: self.max,
            });
        }
        let u = (value - self.min) / self.bin_width();
        let last = self.bins - 1;
        let i = u.floor() as usize;
        if i >= last {
            out[last] = 1.0;
        } else {
            let f = u - i as f64;
            out[i] = 1.0 - f;
            out[i + 1] = f;
        }
        Ok(())
    }
}

/// An ordered set of axes; encoded vectors concatenate one segment per axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EcvSpec {
    pub axes: Vec<Axis>,
}

impl EcvSpec {
    pub fn new(axes: Vec<Axis>) -> Result<Self> {
        if axes.is_empty() {
            return Err(Error::config("ECV spec needs at least one axis"));
        }
        for a in &axes {
            a.validate()?;
        }
        Ok(Self { axes })
    }

    /// The two `[-1, 1]` axes used for angle encoding.
    pub fn unit_circle(bins_per_axis: usize) -> Result<Self> {
        Self::new(vec![
            Axis::new("cos", -1.0, 1.0, bins_per_axis)?,
            Axis::new("sin", -1.0, 1.0, bins_per_axis)?,
        ])
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.bins).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Offsets of each axis segment inside an encoded vector.
    fn segments(&self) -> impl Iterator<Item = (&Axis, std::ops::Range<usize>)> {
        let mut start = 0;
        self.axes.iter().map(move |a| {
            let r = start..start + a.bins;
            start += a.bins;
            (a, r)
        })
    }
}

/// Encodes one value on one axis.
pub fn ecv_encode_scalar(value: f64, axis: &Axis) -> Result<Vec<f64>> {
    let mut out = vec![0.0; axis.bins];
    axis.encode_into(value, &mut out)?;
    Ok(out)
}

/// Encodes a point, one coordinate per axis, into the concatenated vector.
pub fn ecv_encode_point(coords: &[f64], spec: &EcvSpec) -> Result<Vec<f64>> {
    let mut out = vec![0.0; spec.len()];
    ecv_encode_into(coords, spec, &mut out)?;
    Ok(out)
}

/// Like [`ecv_encode_point`] but writes into a caller-provided zeroed slice.
pub fn ecv_encode_into(coords: &[f64], spec: &EcvSpec, out: &mut [f64]) -> Result<()> {
    if coords.len() != spec.axes.len() {
        return Err(Error::Dimension {
            what: "ECV point",
            expected: spec.axes.len(),
            got: coords.len(),
        });
    }
    if out.len() != spec.len() {
        return Err(Error::Dimension {
            what: "ECV output buffer",
            expected: spec.len(),
            got: out.len(),
        });
    }
    for ((axis, range), &c) in spec.segments().zip(coords) {
        axis.encode_into(c, &mut out[range])?;
    }
    Ok(())
}

/// Unit-circle point of an angle in radians; any real angle is accepted.
pub fn angle_point(theta: f64) -> [f64; 2] {
    let t = theta.rem_euclid(TAU);
    [t.cos().clamp(-1.0, 1.0), t.sin().clamp(-1.0, 1.0)]
}

/// Encodes an angle as the ECV of its unit-circle point on
/// `spec` (normally [`EcvSpec::unit_circle`]).
pub fn encode_angle(theta: f64, spec: &EcvSpec) -> Result<Vec<f64>> {
    ecv_encode_point(&angle_point(theta), spec)
}

pub fn encode_angle_into(theta: f64, spec: &EcvSpec, out: &mut [f64]) -> Result<()> {
    ecv_encode_into(&angle_point(theta), spec, out)
}

/// Inverse of [`ecv_encode_point`]: per axis, the weight-interpolated
/// coordinate `min + bin_width * sum(k * w_k)`.
pub fn ecv_decode(values: &[f64], spec: &EcvSpec) -> Result<Vec<f64>> {
    if values.len() != spec.len() {
        return Err(Error::format(format!(
            "encoded vector has length {}, spec expects {}",
            values.len(),
            spec.len()
        )));
    }
    let mut coords = Vec::with_capacity(spec.axes.len());
    for (axis, range) in spec.segments() {
        let seg = &values[range];
        if seg.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::format(format!("axis '{}' has negative or non-finite weights", axis.name)));
        }
        let mass: f64 = seg.iter().sum();
        if (mass - 1.0).abs() > 1e-6 {
            return Err(Error::format(format!("axis '{}' segment sums to {mass}", axis.name)));
        }
        let nonzero: Vec<usize> = seg
            .iter()
            .enumerate()
            .filter(|(_, w)| **w != 0.0)
            .map(|(k, _)| k)
            .collect();
        let adjacent = match nonzero.as_slice() {
            [_] => true,
            [a, b] => b - a == 1,
            _ => false,
        };
        if !adjacent {
            return Err(Error::format(format!(
                "axis '{}' must have one or two adjacent nonzero weights",
                axis.name
            )));
        }
        let index: f64 = nonzero.iter().map(|&k| k as f64 * seg[k]).sum();
        coords.push(axis.min + axis.bin_width() * index);
    }
    Ok(coords)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn unit_axis_1_200() -> Axis {
        Axis::new("x", 1.0, 200.0, 200).unwrap()
    }

    #[test]
    fn unreduced_interpolation_splits_70_30() {
        let seg = ecv_encode_scalar(1.3, &unit_axis_1_200()).unwrap();
        assert_relative_eq!(seg[0], 0.7, epsilon = 1e-12);
        assert_relative_eq!(seg[1], 0.3, epsilon = 1e-12);
        assert!(seg[2..].iter().all(|&w| w == 0.0));
    }

    #[test]
    fn axis_min_is_one_hot() {
        let seg = ecv_encode_scalar(1.0, &unit_axis_1_200()).unwrap();
        assert_eq!(seg[0], 1.0);
        assert_eq!(seg.iter().sum::<f64>(), 1.0);
        let top = ecv_encode_scalar(200.0, &unit_axis_1_200()).unwrap();
        assert_eq!(top[199], 1.0);
    }

    #[test]
    fn reduced_axis_interpolates() {
        let axis = Axis::reduced("x", 0.0, 200.0, 10.0).unwrap();
        assert_relative_eq!(axis.bin_width(), 10.0);
        let seg = ecv_encode_scalar(1.3, &axis).unwrap();
        assert_relative_eq!(seg[0], 0.87, epsilon = 1e-12);
        assert_relative_eq!(seg[1], 0.13, epsilon = 1e-12);
    }

    #[test]
    fn out_of_range_names_axis() {
        let err = ecv_encode_scalar(0.5, &unit_axis_1_200()).unwrap_err();
        match err {
            Error::Range { axis, .. } => assert_eq!(axis, "x"),
            other => panic!("unexpected {other:?}"),
        }
        assert!(ecv_encode_scalar(f64::NAN, &unit_axis_1_200()).is_err());
    }

    #[test]
    fn point_1_1_uses_400_rows() {
        let spec = EcvSpec::new(vec![unit_axis_1_200(), Axis::new("y", 1.0, 200.0, 200).unwrap()])
            .unwrap();
        let v = ecv_encode_point(&[1.0, 1.0], &spec).unwrap();
        assert_eq!(v.len(), 400);
        assert_eq!(v[0], 1.0);
        assert_eq!(v[200], 1.0);
        assert_eq!(v.iter().sum::<f64>(), 2.0);
    }

    #[test]
    fn center_point_segments_are_symmetric() {
        let spec = EcvSpec::new(vec![
            Axis::new("x", -5.0, 5.0, 11).unwrap(),
            Axis::new("y", -5.0, 5.0, 11).unwrap(),
        ])
        .unwrap();
        let v = ecv_encode_point(&[0.0, 0.0], &spec).unwrap();
        assert_eq!(v[..11], v[11..]);
    }

    #[test]
    fn zero_angle_sits_at_top_and_center() {
        let spec = EcvSpec::unit_circle(11).unwrap();
        let v = encode_angle(0.0, &spec).unwrap();
        assert_eq!(v.len(), 22);
        assert_eq!(v[10], 1.0);
        assert_eq!(v[11 + 5], 1.0);
    }

    #[test]
    fn seventeen_degrees_on_ten_bins() {
        // Frozen from ecv_encode_scalar applied to cos/sin of 17 degrees on
        // [-1, 1] with 10 nodes (width 2/9).
        let spec = EcvSpec::unit_circle(10).unwrap();
        let theta = 17f64.to_radians();
        let v = encode_angle(theta, &spec).unwrap();
        assert_eq!(v.len(), 20);
        let (c, s) = (theta.cos(), theta.sin());
        let ux = (c + 1.0) / (2.0 / 9.0);
        let uy = (s + 1.0) / (2.0 / 9.0);
        assert_eq!((ux.floor(), uy.floor()), (8.0, 5.0));
        assert_relative_eq!(v[8], 9.0 - ux, epsilon = 1e-12);
        assert_relative_eq!(v[9], ux - 8.0, epsilon = 1e-12);
        assert_relative_eq!(v[10 + 5], 6.0 - uy, epsilon = 1e-12);
        assert_relative_eq!(v[10 + 6], uy - 5.0, epsilon = 1e-12);
        assert_relative_eq!(v[8], 0.19665, epsilon = 1e-4);
        assert_relative_eq!(v[16], 0.81564, epsilon = 1e-4);
        assert_eq!(v.iter().filter(|w| **w != 0.0).count(), 4);
    }

    #[test]
    fn angle_is_periodic() {
        let spec = EcvSpec::unit_circle(10).unwrap();
        for k in 0..36 {
            let theta = k as f64 * 0.17;
            let a = encode_angle(theta, &spec).unwrap();
            let b = encode_angle(theta + TAU, &spec).unwrap();
            for (x, y) in a.iter().zip(&b) {
                assert!((x - y).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn ten_and_350_degrees_are_close_in_angle_space_but_distinct() {
        let spec = EcvSpec::unit_circle(10).unwrap();
        let a = encode_angle(10f64.to_radians(), &spec).unwrap();
        let b = encode_angle(350f64.to_radians(), &spec).unwrap();
        let l1: f64 = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).sum();
        assert!(l1 > 0.5, "L1 distance {l1}");
        // cos components coincide, only the sin segment differs.
        assert!(a[..10].iter().zip(&b[..10]).all(|(x, y)| (x - y).abs() < 1e-12));
    }

    #[test]
    fn decode_one_hot_gives_node() {
        let axis = Axis::new("x", 2.0, 12.0, 6).unwrap();
        let spec = EcvSpec::new(vec![axis.clone()]).unwrap();
        let mut v = vec![0.0; 6];
        v[3] = 1.0;
        assert_eq!(ecv_decode(&v, &spec).unwrap(), vec![axis.node(3)]);
        assert_eq!(axis.node(3), 8.0);
    }

    #[test]
    fn decode_rejects_malformed() {
        let spec = EcvSpec::new(vec![Axis::new("x", 0.0, 4.0, 5).unwrap()]).unwrap();
        assert!(ecv_decode(&[0.5, 0.0, 0.5, 0.0, 0.0], &spec).is_err());
        assert!(ecv_decode(&[0.5, 0.4, 0.0, 0.0, 0.0], &spec).is_err());
        assert!(ecv_decode(&[1.0, 0.0, 0.0, 0.0], &spec).is_err());
        assert!(ecv_decode(&[1.5, -0.5, 0.0, 0.0, 0.0], &spec).is_err());
    }

    #[test]
    fn decode_recovers_1_3() {
        let spec = EcvSpec::new(vec![unit_axis_1_200()]).unwrap();
        let v = ecv_encode_point(&[1.3], &spec).unwrap();
        assert_relative_eq!(ecv_decode(&v, &spec).unwrap()[0], 1.3, epsilon = 1e-9);
    }

    #[test]
    fn decode_recovers_circle_point() {
        let spec = EcvSpec::unit_circle(10).unwrap();
        let theta = 2.1;
        let p = ecv_decode(&encode_angle(theta, &spec).unwrap(), &spec).unwrap();
        assert!((p[0] - theta.cos()).abs() < 1e-12);
        assert!((p[1] - theta.sin()).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn segment_mass_and_roundtrip(
            min in -100.0f64..100.0,
            span in 0.5f64..500.0,
            bins in 2usize..64,
            t in 0.0f64..=1.0,
        ) {
            let axis = Axis::new("a", min, min + span, bins).unwrap();
            let value = axis.clamp(min + t * span);
            let seg = ecv_encode_scalar(value, &axis).unwrap();
            prop_assert!((seg.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            let nz: Vec<usize> = (0..bins).filter(|&k| seg[k] != 0.0).collect();
            prop_assert!(nz.len() <= 2);
            if nz.len() == 2 { prop_assert_eq!(nz[1] - nz[0], 1); }
            let spec = EcvSpec::new(vec![axis.clone()]).unwrap();
            let back = ecv_decode(&seg, &spec).unwrap()[0];
            prop_assert!((back - value).abs() <= 1e-9 * axis.bin_width());
        }

        #[test]
        fn lipschitz_within_one_bin(
            bins in 2usize..40,
            t in 0.0f64..=1.0,
            frac in -0.999f64..0.999,
        ) {
            let axis = Axis::new("a", 0.0, 10.0, bins).unwrap();
            let w = axis.bin_width();
            let v1 = t * 10.0;
            let v2 = axis.clamp(v1 + frac * w);
            let a = ecv_encode_scalar(v1, &axis).unwrap();
            let b = ecv_encode_scalar(v2, &axis).unwrap();
            let changed = a.iter().zip(&b).filter(|(x, y)| x != y).count();
            let l1: f64 = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).sum();
            prop_assert!(changed <= 3);
            prop_assert!(l1 <= 2.0 * (v1 - v2).abs() / w + 1e-9);
        }
    }
}
