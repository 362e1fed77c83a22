#![allow(dead_code)]

use winsize_core::{ArmModel, Censoring, Copula, Marginal, Scenario};

pub const SIM_CONTROL_RATES: [f64; 3] = [0.00057, 0.0018, 0.0015];
pub const GRID_CONTROL_RATES: [f64; 2] = [0.00057, 0.0015];
pub const SIM_DROPOUT: f64 = 0.00015;
pub const SIM_ACCRUAL: f64 = 200.0;

/// Exponential margins, Gumbel–Hougaard dependence, treatment hazards
/// `lambda_c * exp(-alpha)`, uniform accrual and exponential dropout.
pub fn effect_scenario(
    control_rates: &[f64],
    alpha: &[f64],
    tau: f64,
    study_length: f64,
    accrual: f64,
    dropout: f64,
) -> Scenario<f64> {
    let treat: Vec<f64> = control_rates
        .iter()
        .zip(alpha)
        .map(|(l, a)| l * (-a).exp())
        .collect();
    rates_scenario(control_rates, &treat, tau, study_length, accrual, dropout)
}

pub fn rates_scenario(
    control_rates: &[f64],
    treatment_rates: &[f64],
    tau: f64,
    study_length: f64,
    accrual: f64,
    dropout: f64,
) -> Scenario<f64> {
    let copula = Copula::gumbel_from_tau(tau).unwrap();
    let arm = |rates: &[f64]| {
        ArmModel::new(
            rates
                .iter()
                .map(|&r| Marginal::exponential(r).unwrap())
                .collect(),
            copula.clone(),
        )
        .unwrap()
    };
    Scenario::new(
        arm(control_rates),
        arm(treatment_rates),
        Censoring::uniform(study_length, accrual, dropout).unwrap(),
    )
    .unwrap()
}

pub fn sim_scenario(alpha: [f64; 3], tau: f64, s: f64) -> Scenario<f64> {
    effect_scenario(&SIM_CONTROL_RATES, &alpha, tau, s, SIM_ACCRUAL, SIM_DROPOUT)
}

pub const SPRINT_TREATMENT: [f64; 2] = [6.73e-6, 4.02e-5];
pub const SPRINT_CONTROL: [f64; 2] = [1.19e-5, 4.95e-5];
pub const SPRINT_DROPOUT: f64 = 3.82e-5;
pub const SPRINT_FOLLOW_UP: f64 = 1744.0;
pub const SPRINT_ACCRUAL: f64 = 881.0;
pub const SPRINT_TAUS: [f64; 11] = [0.0, 0.1, 0.1886, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];
/// Rows: beta = 0.1, beta = 0.2.
pub const SPRINT_N: [[u64; 11]; 2] = [
    [
        12884, 14342, 15816, 16018, 17930, 20048, 22242, 24230, 25598, 26152, 26260,
    ],
    [
        9624, 10714, 11814, 11966, 13394, 14976, 16616, 18100, 19122, 19534, 19616,
    ],
];

pub const STICH_TREATMENT: [f64; 2] = [1.92e-4, 3.22e-4];
pub const STICH_CONTROL: [f64; 2] = [2.38e-4, 5.11e-4];
pub const STICH_DROPOUT: f64 = 4.66e-6;
pub const STICH_FOLLOW_UP: f64 = 3051.0;
pub const STICH_ACCRUAL: f64 = 1746.0;
pub const STICH_TAUS: [f64; 11] = [0.0, 0.1, 0.1578, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];
pub const STICH_N: [[u64; 11]; 2] = [
    [726, 730, 732, 734, 736, 732, 724, 706, 676, 634, 592],
    [542, 546, 548, 548, 550, 548, 542, 528, 504, 474, 444],
];

pub fn sprint(tau: f64) -> Scenario<f64> {
    rates_scenario(
        &SPRINT_CONTROL,
        &SPRINT_TREATMENT,
        tau,
        SPRINT_FOLLOW_UP,
        SPRINT_ACCRUAL,
        SPRINT_DROPOUT,
    )
}

pub fn stich(tau: f64) -> Scenario<f64> {
    rates_scenario(
        &STICH_CONTROL,
        &STICH_TREATMENT,
        tau,
        STICH_FOLLOW_UP,
        STICH_ACCRUAL,
        STICH_DROPOUT,
    )
}

pub const EFFECTS: [[f64; 3]; 3] = [[0.2, 0.3, 0.1], [0.1, 0.2, 0.3], [0.2, 0.2, 0.2]];

/// (effect index, tau, s, WR, p_tie in percent) for the formula columns of the
/// extended simulation table; the main-text table is the s in {500, 1000} subset.
pub const WR_TIE_TABLE: [(usize, f64, f64, f64, f64); 54] = [
    (0, 0.0, 250.0, 1.24, 47.22),
    (0, 0.0, 500.0, 1.26, 11.00),
    (0, 0.0, 750.0, 1.27, 5.20),
    (0, 0.0, 1000.0, 1.26, 4.27),
    (0, 0.0, 1250.0, 1.26, 4.12),
    (0, 0.0, 1500.0, 1.25, 4.10),
    (0, 0.3, 250.0, 1.24, 56.61),
    (0, 0.3, 500.0, 1.26, 18.24),
    (0, 0.3, 750.0, 1.27, 8.63),
    (0, 0.3, 1000.0, 1.27, 6.22),
    (0, 0.3, 1250.0, 1.26, 5.62),
    (0, 0.3, 1500.0, 1.26, 5.47),
    (0, 0.8, 250.0, 1.26, 68.13),
    (0, 0.8, 500.0, 1.28, 31.38),
    (0, 0.8, 750.0, 1.29, 17.07),
    (0, 0.8, 1000.0, 1.29, 11.50),
    (0, 0.8, 1250.0, 1.28, 9.33),
    (0, 0.8, 1500.0, 1.28, 8.49),
    (1, 0.0, 250.0, 1.23, 47.48),
    (1, 0.0, 500.0, 1.20, 11.17),
    (1, 0.0, 750.0, 1.17, 5.27),
    (1, 0.0, 1000.0, 1.16, 4.31),
    (1, 0.0, 1250.0, 1.15, 4.16),
    (1, 0.0, 1500.0, 1.14, 4.13),
    (1, 0.3, 250.0, 1.24, 56.90),
    (1, 0.3, 500.0, 1.21, 18.50),
    (1, 0.3, 750.0, 1.18, 8.77),
    (1, 0.3, 1000.0, 1.17, 6.30),
    (1, 0.3, 1250.0, 1.16, 5.68),
    (1, 0.3, 1500.0, 1.15, 5.52),
    (1, 0.8, 250.0, 1.24, 68.18),
    (1, 0.8, 500.0, 1.22, 31.44),
    (1, 0.8, 750.0, 1.20, 17.12),
    (1, 0.8, 1000.0, 1.19, 11.53),
    (1, 0.8, 1250.0, 1.18, 9.35),
    (1, 0.8, 1500.0, 1.17, 8.51),
    (2, 0.0, 250.0, 1.22, 47.16),
    (2, 0.0, 500.0, 1.22, 10.97),
    (2, 0.0, 750.0, 1.22, 5.19),
    (2, 0.0, 1000.0, 1.22, 4.26),
    (2, 0.0, 1250.0, 1.22, 4.12),
    (2, 0.0, 1500.0, 1.22, 4.09),
    (2, 0.3, 250.0, 1.22, 56.54),
    (2, 0.3, 500.0, 1.22, 18.17),
    (2, 0.3, 750.0, 1.22, 8.59),
    (2, 0.3, 1000.0, 1.22, 6.20),
    (2, 0.3, 1250.0, 1.22, 5.60),
    (2, 0.3, 1500.0, 1.22, 5.45),
    (2, 0.8, 250.0, 1.22, 67.91),
    (2, 0.8, 500.0, 1.22, 31.08),
    (2, 0.8, 750.0, 1.22, 16.85),
    (2, 0.8, 1000.0, 1.22, 11.35),
    (2, 0.8, 1250.0, 1.22, 9.22),
    (2, 0.8, 1500.0, 1.22, 8.40),
];
