//! What to compute: case, prime, window and output paths.

use std::path::PathBuf;

use bss_core::closed_form::{self, ClosedFormError, LocalizedCase};
use bss_core::engine::{
    schedule_conj, schedule_v0, schedule_v1, schedule_v2, DifferentialSchedule, EngineError, TowerProfile, V1Variant,
    Window,
};
use bss_core::io::{Meta, VERSION};
use clap::ValueEnum;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Case {
    V0,
    V1,
    V2,
    Conj,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum VariantArg {
    Plain,
    Extra,
}

impl From<VariantArg> for V1Variant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::Plain => V1Variant::Plain,
            VariantArg::Extra => V1Variant::Extra,
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub case: Case,
    pub p: u32,
    pub n: Option<u32>,
    pub m: Option<u32>,
    pub max_degree: i64,
    pub page_cap: Option<u32>,
    pub localized: bool,
    pub variant: Option<V1Variant>,
    pub json: Option<PathBuf>,
    pub svg: Option<PathBuf>,
    pub ascii: bool,
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    ClosedForm(#[from] ClosedFormError),
}

impl RunConfig {
    pub fn window(&self) -> Window {
        Window::new(self.max_degree)
    }

    fn require_n(&self) -> Result<u32, ConfigError> {
        self.n.ok_or_else(|| ConfigError::Usage(format!("--n is required for the {:?} case", self.case)))
    }

    fn require_m(&self) -> Result<u32, ConfigError> {
        self.m.ok_or_else(|| ConfigError::Usage("--m is required for the conj case".into()))
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.max_degree < 0 {
            return Err(ConfigError::Usage("--max-degree must be non-negative".into()));
        }
        if self.localized && self.case == Case::V0 {
            return Err(ConfigError::Usage("localized mode needs |v| > 0; the v0 case has |v| = 0".into()));
        }
        if self.variant.is_some() && !matches!(self.case, Case::V1 | Case::Conj) {
            return Err(ConfigError::Usage("--variant only applies to the v1 and conj cases".into()));
        }
        Ok(())
    }

    pub fn schedule(&self) -> Result<DifferentialSchedule, ConfigError> {
        self.validate()?;
        let w = self.window();
        Ok(match self.case {
            Case::V0 => schedule_v0(self.p, self.require_n()?, &w)?,
            Case::V1 => schedule_v1(self.p, &w, self.variant)?,
            Case::V2 => schedule_v2(self.p, &w)?,
            Case::Conj => schedule_conj(self.p, self.require_n()?, self.require_m()?, &w, self.variant)?,
        })
    }

    /// The closed-form answer the engine should reproduce.
    pub fn oracle(&self) -> Result<TowerProfile, ConfigError> {
        let d = self.max_degree;
        if self.localized {
            let case = match self.case {
                Case::V1 => LocalizedCase::V1,
                Case::V2 => LocalizedCase::V2,
                _ => return Err(ConfigError::Usage("no localized closed form for this case".into())),
            };
            return Ok(TowerProfile::from_dims(&closed_form::localized_expected(case, self.p, d)?));
        }
        if self.variant.is_some() && self.p == 2 {
            return Err(ConfigError::Usage("the p = 2 v1 patterns have no closed form to verify against".into()));
        }
        Ok(match self.case {
            Case::V0 => closed_form::t0n_profile(self.p, self.require_n()?, d)?,
            Case::V1 => closed_form::t12_profile(self.p, d)?,
            Case::V2 => closed_form::t22_profile(self.p, d)?,
            Case::Conj => closed_form::tmn_profile(self.p, self.require_n()?, self.require_m()?, d)?,
        })
    }

    pub fn meta(&self, conjectural: bool) -> Meta {
        Meta {
            case: format!("{:?}", self.case).to_lowercase(),
            p: self.p,
            n: match self.case {
                Case::V0 | Case::Conj => self.n,
                Case::V1 | Case::V2 => Some(2),
            },
            m: self.m.filter(|_| self.case == Case::Conj),
            max_degree: self.max_degree,
            localized: self.localized,
            variant: self.variant,
            conjectural,
            version: VERSION.to_string(),
        }
    }
}
