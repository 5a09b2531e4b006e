#![allow(dead_code)]

use eit_noise_core::model::{idx, FieldParams, PhysicalParams, StateVector};
use eit_noise_core::C64;
use proptest::prelude::*;

pub const ATOMS: f64 = 1e4;
pub const ROUND_TRIP: f64 = 1e-3;

/// Coupling giving a collective coupling `g√(N/τ)` of `collective`.
pub fn coupling(collective: f64) -> f64 {
    collective * (ROUND_TRIP / ATOMS).sqrt()
}

/// Pump on resonance, equal couplings, input intensity ratio 9.
pub fn pump_probe(pump: f64, probe: f64, gamma12: f64) -> PhysicalParams {
    let g = coupling(3.0);
    PhysicalParams {
        pump: FieldParams::coherent(g, 0.5, C64::new(pump, 0.0)),
        probe: FieldParams::coherent(g, 0.5, C64::new(probe, 0.0)),
        ground_dephasing: gamma12,
        cavity_linewidth: 0.1,
        round_trip: ROUND_TRIP,
        atoms: ATOMS,
    }
}

pub fn unequal_intensities() -> PhysicalParams {
    pump_probe(18.0, 6.0, 0.02)
}

pub fn equal_intensities() -> PhysicalParams {
    pump_probe(12.0, 12.0, 0.02)
}

pub fn complex(scale: f64) -> impl Strategy<Value = C64> {
    (-scale..scale, -scale..scale).prop_map(|(re, im)| C64::new(re, im))
}

/// Moderate random parameters: detunings within ±5, saturation |gα| below 5.
pub fn params() -> impl Strategy<Value = PhysicalParams> {
    (
        (0.5..3.0f64, 0.5..3.0f64, 0.2..0.8f64),
        (-5.0..5.0f64, -5.0..5.0f64, -1.0..1.0f64, -1.0..1.0f64),
        (1.0..15.0f64, 1.0..15.0f64, 0.0..0.2f64, 0.05..0.3f64),
    )
        .prop_map(|((c1, c2, split), (d1, d2, dc1, dc2), (in1, in2, g12, gamma))| {
            let mut p = PhysicalParams {
                pump: FieldParams::coherent(coupling(c1), split, C64::new(in1, 0.0)),
                probe: FieldParams::coherent(coupling(c2), 1.0 - split, C64::new(in2, 0.0)),
                ground_dephasing: g12,
                cavity_linewidth: gamma,
                round_trip: ROUND_TRIP,
                atoms: ATOMS,
            };
            p.pump.detuning = d1;
            p.probe.detuning = d2;
            p.pump.cavity_detuning = dc1;
            p.probe.cavity_detuning = dc2;
            p
        })
}

/// Random physical state: a random density matrix scaled by `N`, random fields.
pub fn physical_state() -> impl Strategy<Value = StateVector> {
    (proptest::array::uniform9(complex(1.0)), complex(30.0), complex(30.0)).prop_map(|(entries, a1, a2)| {
        // ρ = M M† / Tr(M M†) is a valid density matrix
        let m = nalgebra::Matrix3::from_iterator(entries);
        let rho = m * m.adjoint();
        let rho = rho / rho.trace();
        let mut x = StateVector::from_populations([0.0; 3], a1, a2);
        let r = rho * C64::new(ATOMS, 0.0);
        let v = eit_noise_core::oracle::atomic_variables(&r);
        x.0.as_mut_slice()[..idx::ATOMIC].copy_from_slice(&v);
        x
    })
}

/// Arbitrary complex vector, not necessarily conjugate-paired.
pub fn any_state() -> impl Strategy<Value = StateVector> {
    proptest::collection::vec(complex(1e3), 12).prop_map(|v| StateVector(eit_noise_core::CVector::from_iterator(v)))
}
