use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Error, Debug)]
pub enum Error {
    #[error("grid size n = {0} must be an even power of two, n >= 8")]
    BadGridSize(usize),

    #[error("period must be positive and finite, got {0}")]
    BadPeriod(f64),

    #[error("fields live on different grids (n = {0} vs n = {1})")]
    GridMismatch(usize, usize),

    #[error("parameter {name} = {value} violates {constraint}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        constraint: &'static str,
    },

    #[error(
        "spectral annulus 1-delta <= |xi| <= 1+delta holds no lattice mode \
         for delta = {delta} (grid spacing 2*pi/P = {spacing}); smallest \
         feasible delta on this grid is {min_feasible}"
    )]
    EmptyAnnulus {
        delta: f64,
        spacing: f64,
        min_feasible: f64,
    },

    #[error(
        "background fields too large: ||u01||_H3 + ||b01||_H3 = {measured} \
         exceeds the admissible M0^(-1/2) = {allowed}"
    )]
    BackgroundTooLarge { measured: f64, allowed: f64 },

    #[error("non-finite value detected at t = {t}, step {step}")]
    NonFinite { t: f64, step: u64 },

    #[error(
        "time step collapsed below dt_min = {dt_min} at t = {t} \
         (computed dt = {dt}); the run is too stiff for this configuration"
    )]
    StepCollapse { t: f64, dt: f64, dt_min: f64 },

    #[error("time horizon too short: decay tail estimate {tail} exceeds 1% of the integral {integral}")]
    HorizonTooShort { tail: f64, integral: f64 },

    #[error("requested time {0} is negative")]
    NegativeTime(f64),

    #[error("mismatched sample times: {0}")]
    TimeMismatch(String),

    #[error("snapshot format error: {0}")]
    SnapshotFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
