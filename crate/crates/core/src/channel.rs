//! Spherical-wavefront steering vectors, their coordinate derivatives and the
//! user channels.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::scenario::{Axis, Point, ScenarioConfig};
use crate::{CMatrix, CVector, C64};

/// `λ / (4π d_i) · exp(-j 2π d_i / λ)` for every antenna `i`.
pub fn steering_vector(antennas: &[Point], point: &Point, wavelength: f64) -> Result<CVector> {
    let nu = 2.0 * PI / wavelength;
    let mut out = CVector::zeros(antennas.len());
    for (i, p) in antennas.iter().enumerate() {
        let d = distance(i, p, point)?;
        out[i] = C64::from_polar(wavelength / (4.0 * PI * d), -nu * d);
    }
    Ok(out)
}

/// Analytic derivative of [`steering_vector`] with respect to one coordinate of
/// `point`: `a_m ((u_m - u)/d_m² + jν (u_m - u)/d_m)`.
pub fn steering_derivative(antennas: &[Point], point: &Point, wavelength: f64, axis: Axis) -> Result<CVector> {
    let nu = 2.0 * PI / wavelength;
    let ax = axis.index();
    let mut out = CVector::zeros(antennas.len());
    for (i, p) in antennas.iter().enumerate() {
        let d = distance(i, p, point)?;
        let a = C64::from_polar(wavelength / (4.0 * PI * d), -nu * d);
        let du = p[ax] - point[ax];
        out[i] = a * C64::new(du / (d * d), nu * du / d);
    }
    Ok(out)
}

fn distance(antenna: usize, p: &Point, point: &Point) -> Result<f64> {
    let d = (p - point).norm();
    if d == 0.0 {
        return Err(Error::SingularGeometry {
            antenna,
            point: [point.x, point.y, point.z],
        });
    }
    Ok(d)
}

/// Every channel quantity derived from a scenario. Immutable after construction.
#[derive(Debug, Clone)]
pub struct ChannelSet {
    /// Rx steering vectors, `M × K`.
    pub a: CMatrix,
    /// Tx steering vectors, `N × K`.
    pub v: CMatrix,
    /// Derivatives of `a` along x, y, z.
    pub da: [CMatrix; 3],
    /// Derivatives of `v` along x, y, z.
    pub dv: [CMatrix; 3],
    /// User channels `h_u` as columns, `N × U`.
    pub hc: CMatrix,
    /// Reflection coefficients (diagonal of `B`).
    pub b: Vec<C64>,
    pub wavelength: f64,
    pub tx_positions: Vec<Point>,
    pub rx_positions: Vec<Point>,
}

impl ChannelSet {
    pub fn num_tx(&self) -> usize {
        self.v.nrows()
    }

    pub fn num_rx(&self) -> usize {
        self.a.nrows()
    }

    pub fn num_targets(&self) -> usize {
        self.v.ncols()
    }

    pub fn num_users(&self) -> usize {
        self.hc.ncols()
    }

    pub fn b_matrix(&self) -> CMatrix {
        CMatrix::from_diagonal(&CVector::from_column_slice(&self.b))
    }

    pub fn h(&self, user: usize) -> CVector {
        self.hc.column(user).into_owned()
    }

    /// Conjugated Tx steering vector `v*(l)` at an arbitrary point, as used by
    /// beampatterns: the pattern gain is `v^T R v* = (v*)^H R v*`.
    pub fn tx_steering_conj(&self, point: &Point) -> Result<CVector> {
        Ok(steering_vector(&self.tx_positions, point, self.wavelength)?.conjugate())
    }
}

fn stack(cols: Vec<CVector>, rows: usize) -> CMatrix {
    let mut m = CMatrix::zeros(rows, cols.len());
    for (j, c) in cols.iter().enumerate() {
        m.set_column(j, c);
    }
    m
}

pub fn build_channel_set(cfg: &ScenarioConfig) -> Result<ChannelSet> {
    let lambda = cfg.wavelength();
    let tx = cfg.tx_positions();
    let rx = cfg.rx_positions();
    let (n, m) = (tx.len(), rx.len());

    let mut a_cols = Vec::new();
    let mut v_cols = Vec::new();
    let mut da_cols: [Vec<CVector>; 3] = Default::default();
    let mut dv_cols: [Vec<CVector>; 3] = Default::default();
    for t in &cfg.targets {
        a_cols.push(steering_vector(&rx, &t.position, lambda)?);
        v_cols.push(steering_vector(&tx, &t.position, lambda)?);
        for axis in Axis::ALL {
            da_cols[axis.index()].push(steering_derivative(&rx, &t.position, lambda, axis)?);
            dv_cols[axis.index()].push(steering_derivative(&tx, &t.position, lambda, axis)?);
        }
    }

    let mut h_cols = Vec::new();
    for user in &cfg.users {
        let mut h = steering_vector(&tx, &user.position, lambda)?.conjugate();
        if user.nlos_coefficient != 0.0 {
            let t = cfg.targets.get(user.nlos_target).ok_or_else(|| {
                Error::ShapeMismatch(format!("nlos_target_index {} out of range", user.nlos_target))
            })?;
            let scatter = steering_vector(&tx, &t.position, lambda)?.conjugate();
            h += scatter * C64::new(user.nlos_coefficient, 0.0);
        }
        h_cols.push(h);
    }

    let [dax, day, daz] = da_cols;
    let [dvx, dvy, dvz] = dv_cols;
    Ok(ChannelSet {
        a: stack(a_cols, m),
        v: stack(v_cols, n),
        da: [stack(dax, m), stack(day, m), stack(daz, m)],
        dv: [stack(dvx, n), stack(dvy, n), stack(dvz, n)],
        hc: stack(h_cols, n),
        b: cfg.targets.iter().map(|t| t.reflection).collect(),
        wavelength: lambda,
        tx_positions: tx,
        rx_positions: rx,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;

    fn rel(a: C64, b: C64) -> f64 {
        (a - b).norm() / b.norm().max(1e-300)
    }

    #[test]
    fn single_antenna_full_phase_turn() {
        let v = steering_vector(&[Point::zeros()], &Point::new(0.0, 0.0, 1.0), 1.0).unwrap();
        assert!(rel(v[0], C64::new(1.0 / (4.0 * PI), 0.0)) < 1e-14);
    }

    #[test]
    fn symmetric_pair_equal_entries_and_antisymmetric_derivative() {
        let ants = [Point::new(-0.25, 0.0, 0.0), Point::new(0.25, 0.0, 0.0)];
        let p = Point::new(0.0, 0.0, 3.0);
        let v = steering_vector(&ants, &p, 0.1).unwrap();
        assert_eq!(v[0], v[1]);
        let dx = steering_derivative(&ants, &p, 0.1, Axis::X).unwrap();
        assert!((dx[0] + dx[1]).norm() < 1e-15 * dx[0].norm());
        assert!(v.dotc(&dx).norm() < 1e-14 * v.norm() * dx.norm());
    }

    #[test]
    fn coincident_point_is_singular() {
        let ants = [Point::zeros(), Point::new(1.0, 0.0, 0.0)];
        let err = steering_vector(&ants, &Point::new(1.0, 0.0, 0.0), 1.0).unwrap_err();
        assert!(matches!(err, Error::SingularGeometry { antenna: 1, .. }));
    }

    #[test]
    fn derivative_zero_when_coordinates_match() {
        let ants = [Point::new(0.3, 0.0, 0.0)];
        let d = steering_derivative(&ants, &Point::new(0.3, 1.0, 2.0), 0.2, Axis::X).unwrap();
        assert_eq!(d[0], C64::new(0.0, 0.0));
    }

    #[test]
    fn large_array_matches_elementwise_recomputation() {
        let cfg = presets::fig3(0.0);
        let lambda = cfg.wavelength();
        let tx = cfg.tx_positions();
        let point = cfg.targets[0].position;
        let v = steering_vector(&tx, &point, lambda).unwrap();
        for (i, p) in tx.iter().enumerate().step_by(97) {
            let dx = p.x - point.x;
            let dy = p.y - point.y;
            let dz = p.z - point.z;
            let d = (dx * dx + dy * dy + dz * dz).sqrt();
            let amp = lambda / (4.0 * PI * d);
            let phase = -(2.0 * PI / lambda) * d;
            let expect = C64::new(amp * phase.cos(), amp * phase.sin());
            assert!(rel(v[i], expect) < 1e-12);
        }
    }

    #[test]
    fn channel_shapes_and_los_user() {
        let mut cfg = presets::fig3(0.0);
        cfg.tx = crate::ArraySpec::upa(6, 6, cfg.tx.center);
        cfg.rx = crate::ArraySpec::upa(5, 5, cfg.rx.center);
        cfg.users.push(crate::UserSpec::los(Point::new(0.1, 0.2, 0.4), 1.0));
        cfg.targets.push(crate::TargetSpec { position: Point::new(0.05, 0.0, 0.9), reflection: C64::new(1.0, 0.0) });
        let ch = build_channel_set(&cfg).unwrap();
        assert_eq!((ch.a.nrows(), ch.a.ncols()), (25, 2));
        assert_eq!((ch.v.nrows(), ch.v.ncols()), (36, 2));
        assert_eq!((ch.hc.nrows(), ch.hc.ncols()), (36, 2));
        let h1 = steering_vector(&cfg.tx_positions(), &cfg.users[1].position, cfg.wavelength()).unwrap();
        assert_eq!(ch.h(1), h1.conjugate());
    }

    #[test]
    fn nlos_adds_scaled_target_path() {
        let mut cfg = presets::fig3(0.0);
        cfg.tx = crate::ArraySpec::upa(4, 4, cfg.tx.center);
        cfg.users[0].nlos_coefficient = 0.3;
        cfg.users[0].position = Point::new(0.2, 0.1, 0.3);
        let ch = build_channel_set(&cfg).unwrap();
        let los = steering_vector(&ch.tx_positions, &cfg.users[0].position, ch.wavelength).unwrap().conjugate();
        let expect = los + ch.v.column(0).conjugate() * C64::new(0.3, 0.0);
        assert!((ch.h(0) - &expect).norm() < 1e-15 * expect.norm());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn central_difference(ants: &[Point], p: &Point, lambda: f64, axis: Axis, step: f64) -> CVector {
            let mut plus = *p;
            let mut minus = *p;
            plus[axis.index()] += step;
            minus[axis.index()] -= step;
            (steering_vector(ants, &plus, lambda).unwrap() - steering_vector(ants, &minus, lambda).unwrap())
                / C64::new(2.0 * step, 0.0)
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            #[test]
            fn derivative_matches_finite_difference(
                x in -0.5..0.5f64, y in -0.5..0.5f64, z in 0.4..3.0f64, axis in 0usize..3,
            ) {
                // L-band pitch keeps ν·δ² small enough for the truncation error
                // of a δ = 1e-5 m central difference to sit below 1e-6.
                let lambda = crate::scenario::SPEED_OF_LIGHT / 1.5e9;
                let ants = crate::ArraySpec::upa(3, 4, Point::zeros()).positions(lambda);
                let p = Point::new(x, y, z);
                let axis = Axis::ALL[axis];
                let analytic = steering_derivative(&ants, &p, lambda, axis).unwrap();
                let numeric = central_difference(&ants, &p, lambda, axis, 1e-5);
                let scale = analytic.iter().map(|z| z.norm()).fold(0.0, f64::max);
                for i in 0..ants.len() {
                    prop_assert!((analytic[i] - numeric[i]).norm() <= 1e-6 * scale);
                }
            }

            #[test]
            fn derivative_matches_finite_difference_mmwave(
                x in -0.2..0.2f64, y in -0.2..0.2f64, z in 0.3..2.0f64, axis in 0usize..3,
            ) {
                let lambda = crate::scenario::SPEED_OF_LIGHT / 28e9;
                let ants = crate::ArraySpec::upa(4, 4, Point::zeros()).positions(lambda);
                let p = Point::new(x, y, z);
                let axis = Axis::ALL[axis];
                let analytic = steering_derivative(&ants, &p, lambda, axis).unwrap();
                let numeric = central_difference(&ants, &p, lambda, axis, 1e-6);
                let scale = analytic.iter().map(|z| z.norm()).fold(0.0, f64::max);
                for i in 0..ants.len() {
                    prop_assert!((analytic[i] - numeric[i]).norm() <= 1e-6 * scale);
                }
            }

            #[test]
            fn amplitude_decreases_along_normal(z0 in 0.2..5.0f64, dz in 0.01..5.0f64) {
                let lambda = 0.0107;
                let ants = crate::ArraySpec::upa(4, 4, Point::zeros()).positions(lambda);
                let near = steering_vector(&ants, &Point::new(0.0, 0.0, z0), lambda).unwrap();
                let far = steering_vector(&ants, &Point::new(0.0, 0.0, z0 + dz), lambda).unwrap();
                prop_assert!(far.norm() < near.norm());
            }

            #[test]
            fn phase_sign_convention(x in -1.0..1.0f64, z in 0.5..3.0f64) {
                let lambda = 0.05;
                let ants = [Point::new(0.1, 0.0, 0.0)];
                let p = Point::new(x, 0.0, z);
                let v = steering_vector(&ants, &p, lambda).unwrap()[0];
                let d = (ants[0] - p).norm();
                let positive = C64::from_polar(lambda / (4.0 * PI * d), 2.0 * PI * d / lambda);
                prop_assert!((v - positive.conj()).norm() <= 1e-12 * v.norm());
            }
        }
    }
}
