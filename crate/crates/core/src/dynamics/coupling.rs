use crate::pbc::Vec3;
use crate::state::State;
use crate::units::BAR_PER_KJ_MOL_NM3;

/// Allowed range of the per-step velocity scale factor.
pub const THERMOSTAT_CLAMP: (f64, f64) = (0.8, 1.25);
/// Allowed range of the per-step box scale factor.
pub const BAROSTAT_CLAMP: (f64, f64) = (0.98, 1.02);

/// λ = √(1 + (Δt/τ)(T0/T − 1)), clamped.
pub fn berendsen_lambda(t_now: f64, t0: f64, tau: f64, dt: f64) -> f64 {
    if !(t_now > 0.0) {
        return 1.0;
    }
    let l2 = 1.0 + dt / tau * (t0 / t_now - 1.0);
    l2.max(0.0).sqrt().clamp(THERMOSTAT_CLAMP.0, THERMOSTAT_CLAMP.1)
}

/// Scale all velocities toward `t0`; returns the applied λ.
pub fn berendsen_thermostat(velocities: &mut [Vec3], t_now: f64, t0: f64, tau: f64, dt: f64) -> f64 {
    let lambda = berendsen_lambda(t_now, t0, tau, dt);
    if lambda != 1.0 {
        velocities.iter_mut().for_each(|v| *v *= lambda);
    }
    lambda
}

/// μ = (1 − (Δt/τ)·κ·(P0 − P))^(1/3), clamped.
pub fn berendsen_mu(p_now: f64, p0: f64, tau: f64, dt: f64, compressibility: f64) -> f64 {
    let m3 = 1.0 - dt / tau * compressibility * (p0 - p_now);
    m3.cbrt().clamp(BAROSTAT_CLAMP.0, BAROSTAT_CLAMP.1)
}

/// Isotropically rescale box and coordinates; returns the applied μ.
/// Any neighbour list built before this call is stale.
pub fn berendsen_barostat(state: &mut State, p_now: f64, p0: f64, tau: f64, dt: f64, compressibility: f64) -> f64 {
    let mu = berendsen_mu(p_now, p0, tau, dt, compressibility);
    if mu != 1.0 {
        state.simbox = state.simbox.scaled(mu);
        state.positions.iter_mut().for_each(|r| *r *= mu);
        state.wrap_positions();
    }
    mu
}

/// Instantaneous pressure in bar from kinetic energy, pair virial Σ r·F and volume.
pub fn pressure_bar(kinetic: f64, virial: f64, volume: f64) -> f64 {
    (2.0 * kinetic + virial) / (3.0 * volume) * BAR_PER_KJ_MOL_NM3
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pbc::SimBox;

    #[test]
    fn on_target_temperature_is_identity() {
        assert_eq!(berendsen_lambda(300.0, 300.0, 0.1, 0.002), 1.0);
    }

    #[test]
    fn heating_hand_value() {
        let l = berendsen_lambda(200.0, 300.0, 1.0, 0.01);
        assert!((l - 1.005f64.sqrt()).abs() < 1e-15);
        assert!((l - 1.002497).abs() < 1e-6);
    }

    #[test]
    fn lambda_is_clamped() {
        assert_eq!(berendsen_lambda(1.0, 1000.0, 0.002, 0.002), THERMOSTAT_CLAMP.1);
        assert_eq!(berendsen_lambda(1000.0, 1.0, 0.002, 0.002), THERMOSTAT_CLAMP.0);
    }

    #[test]
    fn scaling_keeps_zero_momentum() {
        let mut v = vec![Vec3::new(1.0, -2.0, 0.5), Vec3::new(-1.0, 2.0, -0.5)];
        berendsen_thermostat(&mut v, 250.0, 300.0, 0.1, 0.002);
        assert_eq!(v[0] + v[1], Vec3::zeros());
    }

    #[test]
    fn barostat_identity_and_sign() {
        assert_eq!(berendsen_mu(1.0, 1.0, 1.0, 0.002, 4.5e-5), 1.0);
        assert!(berendsen_mu(500.0, 1.0, 1.0, 0.002, 4.5e-5) > 1.0);
        assert!(berendsen_mu(-500.0, 1.0, 1.0, 0.002, 4.5e-5) < 1.0);
        assert_eq!(berendsen_mu(1e9, 1.0, 0.002, 0.002, 1.0), BAROSTAT_CLAMP.1);
    }

    #[test]
    fn barostat_scales_box_and_positions() {
        let mut s = State::new(vec![Vec3::new(1.0, 1.0, 1.0)], SimBox::cubic(2.0).unwrap());
        let unchanged = s.clone();
        berendsen_barostat(&mut s, 1.0, 1.0, 1.0, 0.002, 4.5e-5);
        assert_eq!(s, unchanged);
        let mu = berendsen_barostat(&mut s, 1e4, 1.0, 1.0, 0.002, 4.5e-5);
        assert!(mu > 1.0);
        assert!((s.simbox.lengths.x - 2.0 * mu).abs() < 1e-15);
        assert!((s.positions[0].x - mu).abs() < 1e-15);
    }

    #[test]
    fn ideal_gas_pressure() {
        // N kT / V with N = 1000, T = 300 K, V = 1000 nm³ at zero virial
        let n = 1000.0;
        let ke = 1.5 * n * crate::units::BOLTZMANN * 300.0;
        let p = pressure_bar(ke, 0.0, 1000.0);
        let expected = n * crate::units::BOLTZMANN * 300.0 / 1000.0 * BAR_PER_KJ_MOL_NM3;
        assert!((p - expected).abs() < 1e-9 * expected);
    }
}
