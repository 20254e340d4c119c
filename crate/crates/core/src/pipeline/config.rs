use std::collections::BTreeSet;
use std::fmt::Write as _;

use crate::domain::{GridShape, HaloMode, NnStrategy};
use crate::dynamics::{Barostat, EmConfig, IntegratorConfig, Scheme, Thermostat};
use crate::error::{Error, Result};
use crate::forcefield::CoulombScheme;
use crate::nnpot::{ModelSpec, NnFamily};
use crate::state::Precision;
use crate::synthetic::{AtomType, SyntheticParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Stage {
    Em,
    Nvt,
    Npt,
    Md,
}

impl Stage {
    pub const ALL: [Stage; 4] = [Stage::Em, Stage::Nvt, Stage::Npt, Stage::Md];

    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Em => "em",
            Stage::Nvt => "nvt",
            Stage::Npt => "npt",
            Stage::Md => "md",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Stage::ALL.into_iter().find(|st| st.as_str() == s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig {
    pub n_atoms: usize,
    /// nm⁻³
    pub density: f64,
    pub fraction_grouped: f64,
    /// K
    pub temperature: f64,
    pub jitter: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForcefieldConfig {
    pub coulomb: CoulombScheme,
    pub epsilon_rf: f64,
    /// nm
    pub skin: f64,
    pub group: AtomType,
    pub solvent: AtomType,
    pub bond_k: f64,
    pub angle_k: f64,
    pub dihedral_k: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSection {
    pub precision: Precision,
    pub seed: u64,
    pub workers: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmSection {
    /// nm
    pub rcutoff: f64,
    pub max_steps: usize,
    /// kJ·mol⁻¹·nm⁻¹
    pub emtol: f64,
    /// nm
    pub emstep: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DynamicsSection {
    pub integrator: Scheme,
    /// fs
    pub dt: f64,
    pub steps: usize,
    /// nm
    pub rcutoff: f64,
    pub tcoupl: bool,
    /// K
    pub ref_t: f64,
    /// ps
    pub tau_t: f64,
    pub pcoupl: bool,
    /// bar
    pub ref_p: f64,
    /// ps
    pub tau_p: f64,
    /// bar⁻¹
    pub compressibility: f64,
    pub nstlog: usize,
    pub nstxout: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NnSection {
    pub stages: BTreeSet<Stage>,
    pub group: String,
    /// Model file; `None` builds a random model from the keys below.
    pub model: Option<String>,
    pub family: NnFamily,
    pub depth: usize,
    /// nm
    pub rc_model: f64,
    pub hidden: usize,
    pub n_basis: usize,
    pub seed: u64,
    pub output_scale: f64,
    pub strategy: NnStrategy,
    pub n_ranks: usize,
    pub grid: GridShape,
    pub halo_mode: HaloMode,
    /// nm
    pub halo_width: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub system: SystemConfig,
    pub forcefield: ForcefieldConfig,
    pub run: RunSection,
    pub em: EmSection,
    pub nvt: DynamicsSection,
    pub npt: DynamicsSection,
    pub md: DynamicsSection,
    pub nn: NnSection,
}

impl Default for SystemConfig {
    fn default() -> Self {
        let p = SyntheticParams::default();
        SystemConfig {
            n_atoms: p.n_atoms,
            density: p.density,
            fraction_grouped: p.fraction_grouped,
            temperature: p.temperature,
            jitter: p.jitter,
        }
    }
}

impl Default for ForcefieldConfig {
    fn default() -> Self {
        let p = SyntheticParams::default();
        ForcefieldConfig {
            coulomb: CoulombScheme::ReactionField,
            epsilon_rf: 78.0,
            skin: 0.1,
            group: p.types[0].clone(),
            solvent: p.types[1].clone(),
            bond_k: p.bond_k,
            angle_k: p.angle_k,
            dihedral_k: p.dihedral_k,
        }
    }
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection { precision: Precision::Fp32, seed: SyntheticParams::default().seed, workers: 1 }
    }
}

impl Default for EmSection {
    fn default() -> Self {
        let em = EmConfig::default();
        EmSection { rcutoff: 1.2, max_steps: em.max_steps, emtol: em.force_tolerance, emstep: em.initial_step }
    }
}

impl DynamicsSection {
    fn equilibration(pcoupl: bool) -> Self {
        DynamicsSection {
            integrator: Scheme::Leapfrog,
            dt: 2.0,
            steps: 50_000,
            rcutoff: 1.2,
            tcoupl: true,
            ref_t: 300.0,
            tau_t: 0.1,
            pcoupl,
            ref_p: 1.0,
            tau_p: 1.0,
            compressibility: 4.5e-5,
            nstlog: 100,
            nstxout: 1000,
        }
    }

    pub fn nvt() -> Self {
        Self::equilibration(false)
    }

    pub fn npt() -> Self {
        Self::equilibration(true)
    }

    pub fn md() -> Self {
        DynamicsSection { dt: 1.0, steps: 10_000, rcutoff: 0.7, ..Self::equilibration(false) }
    }

    pub fn integrator_config(&self) -> IntegratorConfig {
        IntegratorConfig {
            dt_fs: self.dt,
            scheme: self.integrator,
            thermostat: self.tcoupl.then_some(Thermostat { t0: self.ref_t, tau: self.tau_t }),
            barostat: self.pcoupl.then_some(Barostat {
                p0: self.ref_p,
                tau: self.tau_p,
                compressibility: self.compressibility,
            }),
        }
    }

    /// ps
    pub fn simulated_time(&self) -> f64 {
        self.steps as f64 * self.dt * crate::units::PS_PER_FS
    }
}

impl Default for NnSection {
    fn default() -> Self {
        NnSection {
            stages: BTreeSet::from([Stage::Md]),
            group: SyntheticParams::default().group_name,
            model: None,
            family: NnFamily::MessagePassing,
            depth: 2,
            rc_model: 0.6,
            hidden: 32,
            n_basis: 8,
            seed: 2024,
            output_scale: 0.05,
            strategy: NnStrategy::GatherToRoot,
            n_ranks: 1,
            grid: GridShape::Slab,
            halo_mode: HaloMode::Symmetric,
            halo_width: 1.2,
        }
    }
}

impl NnSection {
    pub fn enabled(&self) -> bool {
        !self.stages.is_empty()
    }

    /// Spec of the random model used when no model file is given.
    pub fn model_spec(&self, n_types: usize) -> ModelSpec {
        ModelSpec {
            family: self.family,
            rc: self.rc_model,
            n_types,
            n_basis: self.n_basis,
            hidden: self.hidden,
            depth: if self.family == NnFamily::EmbedFit { 1 } else { self.depth },
            seed: self.seed,
            output_scale: self.output_scale,
        }
    }

    /// nm
    pub fn receptive_field(&self) -> f64 {
        match self.family {
            NnFamily::EmbedFit => self.rc_model,
            NnFamily::MessagePassing => self.depth as f64 * self.rc_model,
        }
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            system: SystemConfig::default(),
            forcefield: ForcefieldConfig::default(),
            run: RunSection::default(),
            em: EmSection::default(),
            nvt: DynamicsSection::nvt(),
            npt: DynamicsSection::npt(),
            md: DynamicsSection::md(),
            nn: NnSection::default(),
        }
    }
}

impl RunConfig {
    /// Reduced step counts for interactive runs.
    pub fn desk_scale() -> Self {
        let mut c = RunConfig::default();
        c.nvt.steps = 2000;
        c.npt.steps = 2000;
        c.md.steps = 1000;
        c
    }

    /// Step counts and cutoffs of the reference protocol.
    pub fn paper_scale() -> Self {
        RunConfig::default()
    }

    pub fn dynamics(&self, stage: Stage) -> Option<&DynamicsSection> {
        match stage {
            Stage::Em => None,
            Stage::Nvt => Some(&self.nvt),
            Stage::Npt => Some(&self.npt),
            Stage::Md => Some(&self.md),
        }
    }

    pub fn em_config(&self) -> EmConfig {
        EmConfig {
            initial_step: self.em.emstep,
            max_steps: self.em.max_steps,
            force_tolerance: self.em.emtol,
            ..EmConfig::default()
        }
    }

    pub fn synthetic_params(&self) -> SyntheticParams {
        SyntheticParams {
            n_atoms: self.system.n_atoms,
            density: self.system.density,
            fraction_grouped: self.system.fraction_grouped,
            temperature: self.system.temperature,
            seed: self.run.seed,
            group_name: self.nn.group.clone(),
            jitter: self.system.jitter,
            types: vec![self.forcefield.group.clone(), self.forcefield.solvent.clone()],
            bond_k: self.forcefield.bond_k,
            angle_k: self.forcefield.angle_k,
            dihedral_k: self.forcefield.dihedral_k,
        }
    }

    /// Non-fatal oddities worth reporting to the user.
    pub fn warnings(&self) -> Vec<String> {
        self.nn
            .stages
            .iter()
            .filter(|&&s| s != Stage::Md)
            .map(|s| format!("neural-network forces enabled in the {} stage", s.as_str()))
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        let s = &self.system;
        if s.n_atoms < 2 {
            return Err(Error::config("system.n_atoms", "need at least 2 atoms"));
        }
        positive("system.density", s.density)?;
        if !(0.0..=1.0).contains(&s.fraction_grouped) {
            return Err(Error::config("system.fraction_grouped", "must lie in [0, 1]"));
        }
        if !(s.temperature >= 0.0) {
            return Err(Error::config("system.temperature", "must be non-negative"));
        }
        if !(0.0..0.5).contains(&s.jitter) {
            return Err(Error::config("system.jitter", "must lie in [0, 0.5)"));
        }
        let ff = &self.forcefield;
        if ff.coulomb == CoulombScheme::ReactionField && !(ff.epsilon_rf >= 1.0) {
            return Err(Error::config("forcefield.epsilon_rf", "must be at least 1"));
        }
        if !(ff.skin >= 0.0) {
            return Err(Error::config("forcefield.skin", "must be non-negative"));
        }
        for (prefix, t) in [("group", &ff.group), ("solvent", &ff.solvent)] {
            positive(&format!("forcefield.{prefix}_mass"), t.mass)?;
            positive(&format!("forcefield.{prefix}_sigma"), t.sigma)?;
            if !(t.epsilon >= 0.0) {
                return Err(Error::config(format!("forcefield.{prefix}_epsilon"), "must be non-negative"));
            }
        }
        if self.run.workers == 0 {
            return Err(Error::config("run.workers", "need at least one worker"));
        }
        positive("em.rcutoff", self.em.rcutoff)?;
        positive("em.emtol", self.em.emtol)?;
        positive("em.emstep", self.em.emstep)?;
        for stage in [Stage::Nvt, Stage::Npt, Stage::Md] {
            let d = self.dynamics(stage).expect("dynamics stage");
            let key = |k: &str| format!("{}.{k}", stage.as_str());
            positive(&key("rcutoff"), d.rcutoff)?;
            if d.integrator == Scheme::Steep {
                return Err(Error::config(key("integrator"), "steepest descent is only used by the em stage"));
            }
            if d.pcoupl && d.integrator != Scheme::Leapfrog {
                return Err(Error::config(key("pcoupl"), "pressure coupling needs the leapfrog integrator"));
            }
            d.integrator_config().validate().map_err(|e| match e {
                Error::Config { key: k, msg } => Error::config(key(&k), msg),
                other => other,
            })?;
        }
        let nn = &self.nn;
        if nn.group.is_empty() || nn.group.contains(char::is_whitespace) {
            return Err(Error::config("nn.group", "must be a single non-empty word"));
        }
        if nn.depth == 0 {
            return Err(Error::config("nn.depth", "need at least one layer"));
        }
        positive("nn.rc_model", nn.rc_model)?;
        if nn.hidden == 0 || nn.n_basis == 0 {
            return Err(Error::config("nn.hidden", "network sizes must be positive"));
        }
        if nn.n_ranks == 0 {
            return Err(Error::config("nn.n_ranks", "need at least one rank"));
        }
        positive("nn.halo_width", nn.halo_width)?;
        if nn.strategy == NnStrategy::HaloInference {
            if nn.halo_mode != HaloMode::Symmetric {
                return Err(Error::config("nn.halo_mode", "halo_inference needs symmetric ghosts"));
            }
            let required = nn.receptive_field();
            if nn.halo_width < required * (1.0 - 1e-12) {
                return Err(Error::config(
                    "nn.halo_width",
                    format!("halo_inference needs halo_width ≥ depth·rc_model = {required} nm"),
                ));
            }
        }
        Ok(())
    }

    /// Canonical text form; parsing it yields an identical configuration.
    pub fn to_canonical(&self) -> String {
        let mut out = String::from("; nnmd run configuration\n");
        let s = &self.system;
        section(&mut out, "system");
        kv(&mut out, "n_atoms", s.n_atoms, "");
        kv(&mut out, "density", s.density, "atoms/nm³");
        kv(&mut out, "fraction_grouped", s.fraction_grouped, "leading chain fraction handed to the NN");
        kv(&mut out, "temperature", s.temperature, "K, initial velocities");
        kv(&mut out, "jitter", s.jitter, "fraction of lattice spacing");

        let ff = &self.forcefield;
        section(&mut out, "forcefield");
        kv(&mut out, "coulomb", ff.coulomb.as_str(), "reaction_field | cutoff_shifted");
        kv(&mut out, "epsilon_rf", ff.epsilon_rf, "");
        kv(&mut out, "skin", ff.skin, "nm");
        for (prefix, t) in [("group", &ff.group), ("solvent", &ff.solvent)] {
            kv(&mut out, &format!("{prefix}_name"), &t.name, "");
            kv(&mut out, &format!("{prefix}_mass"), t.mass, "amu");
            kv(&mut out, &format!("{prefix}_charge"), t.charge, "e, alternating sign");
            kv(&mut out, &format!("{prefix}_sigma"), t.sigma, "nm");
            kv(&mut out, &format!("{prefix}_epsilon"), t.epsilon, "kJ/mol");
        }
        kv(&mut out, "bond_k", ff.bond_k, "kJ/mol/nm²");
        kv(&mut out, "angle_k", ff.angle_k, "kJ/mol/rad²");
        kv(&mut out, "dihedral_k", ff.dihedral_k, "kJ/mol");

        section(&mut out, "run");
        kv(&mut out, "precision", self.run.precision.as_str(), "fp32 | fp64");
        kv(&mut out, "seed", self.run.seed, "");
        kv(&mut out, "workers", self.run.workers, "");

        section(&mut out, "em");
        kv(&mut out, "rcutoff", self.em.rcutoff, "nm");
        kv(&mut out, "max_steps", self.em.max_steps, "");
        kv(&mut out, "emtol", self.em.emtol, "kJ/mol/nm");
        kv(&mut out, "emstep", self.em.emstep, "nm");

        for stage in [Stage::Nvt, Stage::Npt, Stage::Md] {
            let d = self.dynamics(stage).expect("dynamics stage");
            section(&mut out, stage.as_str());
            kv(&mut out, "integrator", scheme_str(d.integrator), "leapfrog | velocity_verlet");
            kv(&mut out, "dt", d.dt, "fs");
            kv(&mut out, "steps", d.steps, "");
            kv(&mut out, "rcutoff", d.rcutoff, "nm");
            kv(&mut out, "tcoupl", coupling_str(d.tcoupl), "berendsen | no");
            kv(&mut out, "ref_t", d.ref_t, "K");
            kv(&mut out, "tau_t", d.tau_t, "ps");
            kv(&mut out, "pcoupl", coupling_str(d.pcoupl), "berendsen | no");
            kv(&mut out, "ref_p", d.ref_p, "bar");
            kv(&mut out, "tau_p", d.tau_p, "ps");
            kv(&mut out, "compressibility", d.compressibility, "1/bar");
            kv(&mut out, "nstlog", d.nstlog, "0 disables");
            kv(&mut out, "nstxout", d.nstxout, "0 disables");
        }

        let nn = &self.nn;
        section(&mut out, "nn");
        let stages = if nn.stages.is_empty() {
            "none".to_string()
        } else {
            nn.stages.iter().map(|s| s.as_str()).collect::<Vec<_>>().join(",")
        };
        kv(&mut out, "stages", stages, "comma list of em,nvt,npt,md or none");
        kv(&mut out, "group", &nn.group, "");
        kv(&mut out, "model", nn.model.as_deref().unwrap_or("none"), "JSON model file or none");
        kv(&mut out, "family", nn.family.as_str(), "embed_fit | message_passing");
        kv(&mut out, "depth", nn.depth, "message-passing layers L");
        kv(&mut out, "rc_model", nn.rc_model, "nm");
        kv(&mut out, "hidden", nn.hidden, "");
        kv(&mut out, "n_basis", nn.n_basis, "");
        kv(&mut out, "seed", nn.seed, "");
        kv(&mut out, "output_scale", nn.output_scale, "");
        kv(&mut out, "strategy", nn.strategy.as_str(), "gather_to_root | halo_inference");
        kv(&mut out, "n_ranks", nn.n_ranks, "");
        kv(&mut out, "grid", grid_str(nn.grid), "slab | balanced");
        kv(&mut out, "halo_mode", nn.halo_mode.as_str(), "symmetric | asymmetric");
        kv(&mut out, "halo_width", nn.halo_width, "nm");
        out
    }
}

fn positive(key: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::config(key, format!("must be positive, got {v}")))
    }
}

fn section(out: &mut String, name: &str) {
    let _ = write!(out, "\n[{name}]\n");
}

fn kv(out: &mut String, key: &str, value: impl std::fmt::Display, note: &str) {
    let line = format!("{key} = {value}");
    if note.is_empty() {
        let _ = writeln!(out, "{line}");
    } else {
        let _ = writeln!(out, "{line:<32} ; {note}");
    }
}

fn scheme_str(s: Scheme) -> &'static str {
    match s {
        Scheme::Leapfrog => "leapfrog",
        Scheme::VelocityVerlet => "velocity_verlet",
        Scheme::Steep => "steep",
    }
}

fn coupling_str(on: bool) -> &'static str {
    if on {
        "berendsen"
    } else {
        "no"
    }
}

fn grid_str(g: GridShape) -> &'static str {
    match g {
        GridShape::Slab => "slab",
        GridShape::Balanced => "balanced",
    }
}

struct Value<'a> {
    key: String,
    raw: &'a str,
}

impl Value<'_> {
    fn err(&self, msg: impl Into<String>) -> Error {
        Error::config(self.key.clone(), msg)
    }

    fn num<T: std::str::FromStr>(&self) -> Result<T> {
        self.raw.parse().map_err(|_| self.err(format!("cannot parse `{}` as {}", self.raw, short_type::<T>())))
    }

    fn float(&self) -> Result<f64> {
        let v: f64 = self.num()?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(self.err("must be finite"))
        }
    }

    fn word(&self) -> Result<String> {
        if self.raw.contains(char::is_whitespace) {
            return Err(self.err("must be a single word"));
        }
        Ok(self.raw.to_string())
    }

    fn choice<T>(&self, parse: impl Fn(&str) -> Option<T>, options: &str) -> Result<T> {
        parse(self.raw).ok_or_else(|| self.err(format!("expected one of {options}, got `{}`", self.raw)))
    }

    fn coupling(&self) -> Result<bool> {
        self.choice(
            |s| match s {
                "berendsen" => Some(true),
                "no" => Some(false),
                _ => None,
            },
            "berendsen, no",
        )
    }
}

fn short_type<T>() -> &'static str {
    let name = std::any::type_name::<T>();
    if name.starts_with('f') {
        "a number"
    } else {
        "a non-negative integer"
    }
}

fn set_system(c: &mut SystemConfig, k: &str, v: &Value) -> Result<bool> {
    match k {
        "n_atoms" => c.n_atoms = v.num()?,
        "density" => c.density = v.float()?,
        "fraction_grouped" => c.fraction_grouped = v.float()?,
        "temperature" => c.temperature = v.float()?,
        "jitter" => c.jitter = v.float()?,
        _ => return Ok(false),
    }
    Ok(true)
}

fn set_forcefield(c: &mut ForcefieldConfig, k: &str, v: &Value) -> Result<bool> {
    if let Some((prefix, field)) = k.split_once('_') {
        let t = match prefix {
            "group" => Some(&mut c.group),
            "solvent" => Some(&mut c.solvent),
            _ => None,
        };
        if let Some(t) = t {
            match field {
                "name" => t.name = v.word()?,
                "mass" => t.mass = v.float()?,
                "charge" => t.charge = v.float()?,
                "sigma" => t.sigma = v.float()?,
                "epsilon" => t.epsilon = v.float()?,
                _ => return Ok(false),
            }
            return Ok(true);
        }
    }
    match k {
        "coulomb" => {
            c.coulomb = v.choice(
                |s| match s {
                    "reaction_field" => Some(CoulombScheme::ReactionField),
                    "cutoff_shifted" => Some(CoulombScheme::CutoffShifted),
                    _ => None,
                },
                "reaction_field, cutoff_shifted",
            )?
        }
        "epsilon_rf" => c.epsilon_rf = v.float()?,
        "skin" => c.skin = v.float()?,
        "bond_k" => c.bond_k = v.float()?,
        "angle_k" => c.angle_k = v.float()?,
        "dihedral_k" => c.dihedral_k = v.float()?,
        _ => return Ok(false),
    }
    Ok(true)
}

fn set_run(c: &mut RunSection, k: &str, v: &Value) -> Result<bool> {
    match k {
        "precision" => {
            c.precision = v.choice(
                |s| match s {
                    "fp32" => Some(Precision::Fp32),
                    "fp64" => Some(Precision::Fp64),
                    _ => None,
                },
                "fp32, fp64",
            )?
        }
        "seed" => c.seed = v.num()?,
        "workers" => c.workers = v.num()?,
        _ => return Ok(false),
    }
    Ok(true)
}

fn set_em(c: &mut EmSection, k: &str, v: &Value) -> Result<bool> {
    match k {
        "rcutoff" => c.rcutoff = v.float()?,
        "max_steps" => c.max_steps = v.num()?,
        "emtol" => c.emtol = v.float()?,
        "emstep" => c.emstep = v.float()?,
        _ => return Ok(false),
    }
    Ok(true)
}

fn set_dynamics(c: &mut DynamicsSection, k: &str, v: &Value) -> Result<bool> {
    match k {
        "integrator" => {
            c.integrator = v.choice(
                |s| match s {
                    "leapfrog" | "md" => Some(Scheme::Leapfrog),
                    "velocity_verlet" | "md-vv" => Some(Scheme::VelocityVerlet),
                    _ => None,
                },
                "leapfrog, velocity_verlet",
            )?
        }
        "dt" => c.dt = v.float()?,
        "steps" => c.steps = v.num()?,
        "rcutoff" => c.rcutoff = v.float()?,
        "tcoupl" => c.tcoupl = v.coupling()?,
        "ref_t" => c.ref_t = v.float()?,
        "tau_t" => c.tau_t = v.float()?,
        "pcoupl" => c.pcoupl = v.coupling()?,
        "ref_p" => c.ref_p = v.float()?,
        "tau_p" => c.tau_p = v.float()?,
        "compressibility" => c.compressibility = v.float()?,
        "nstlog" => c.nstlog = v.num()?,
        "nstxout" => c.nstxout = v.num()?,
        _ => return Ok(false),
    }
    Ok(true)
}

fn set_nn(c: &mut NnSection, k: &str, v: &Value) -> Result<bool> {
    match k {
        "stages" => {
            c.stages = if v.raw == "none" {
                BTreeSet::new()
            } else {
                v.raw
                    .split(',')
                    .map(|s| {
                        let s = s.trim();
                        Stage::parse(s).ok_or_else(|| v.err(format!("unknown stage `{s}`")))
                    })
                    .collect::<Result<_>>()?
            }
        }
        "group" => c.group = v.word()?,
        "model" => c.model = if v.raw == "none" { None } else { Some(v.raw.to_string()) },
        "family" => c.family = v.choice(NnFamily::parse, "embed_fit, message_passing")?,
        "depth" => c.depth = v.num()?,
        "rc_model" => c.rc_model = v.float()?,
        "hidden" => c.hidden = v.num()?,
        "n_basis" => c.n_basis = v.num()?,
        "seed" => c.seed = v.num()?,
        "output_scale" => c.output_scale = v.float()?,
        "strategy" => c.strategy = v.choice(NnStrategy::parse, "gather_to_root, halo_inference")?,
        "n_ranks" => c.n_ranks = v.num()?,
        "grid" => {
            c.grid = v.choice(
                |s| match s {
                    "slab" => Some(GridShape::Slab),
                    "balanced" => Some(GridShape::Balanced),
                    _ => None,
                },
                "slab, balanced",
            )?
        }
        "halo_mode" => c.halo_mode = v.choice(HaloMode::parse, "symmetric, asymmetric")?,
        "halo_width" => c.halo_width = v.float()?,
        _ => return Ok(false),
    }
    Ok(true)
}

/// Parse `key = value` lines grouped under `[section]` headers; `;` starts a
/// comment. Missing keys keep their defaults; unknown keys are errors.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    let mut section: Option<String> = None;
    let mut seen = BTreeSet::new();
    for (n, raw_line) in text.lines().enumerate() {
        let line_no = n + 1;
        let line = raw_line.split(';').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[') {
            let name = name
                .strip_suffix(']')
                .ok_or_else(|| Error::config(format!("line {line_no}"), "unterminated section header"))?
                .trim();
            if !["system", "forcefield", "run", "em", "nvt", "npt", "md", "nn"].contains(&name) {
                return Err(Error::config(name, "unknown section"));
            }
            section = Some(name.to_string());
            continue;
        }
        let (k, raw) = line
            .split_once('=')
            .ok_or_else(|| Error::config(format!("line {line_no}"), "expected `key = value`"))?;
        let k = k.trim();
        let sec = section
            .as_deref()
            .ok_or_else(|| Error::config(k, "key appears before any [section] header"))?;
        let key = format!("{sec}.{k}");
        let value = Value { key: key.clone(), raw: raw.trim() };
        if value.raw.is_empty() {
            return Err(value.err("missing value"));
        }
        if !seen.insert(key.clone()) {
            return Err(value.err("key given twice"));
        }
        let known = match sec {
            "system" => set_system(&mut cfg.system, k, &value)?,
            "forcefield" => set_forcefield(&mut cfg.forcefield, k, &value)?,
            "run" => set_run(&mut cfg.run, k, &value)?,
            "em" => set_em(&mut cfg.em, k, &value)?,
            "nvt" => set_dynamics(&mut cfg.nvt, k, &value)?,
            "npt" => set_dynamics(&mut cfg.npt, k, &value)?,
            "md" => set_dynamics(&mut cfg.md, k, &value)?,
            "nn" => set_nn(&mut cfg.nn, k, &value)?,
            _ => unreachable!("section names are checked above"),
        };
        if !known {
            return Err(value.err("unknown key"));
        }
    }
    cfg.validate()?;
    for w in cfg.warnings() {
        log::warn!("{w}");
    }
    Ok(cfg)
}
