//! `key = value` configuration files with `[scene]`, `[tracker]` and `[run]`
//! sections. `#` and `;` start comments. Unknown sections or keys are errors;
//! missing keys keep their defaults.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use ini::Ini;

use crate::classifier::CgVariant;
use crate::error::{Error, Result};
use crate::eval::RunConfig;
use crate::peak::FusionWeights;
use crate::sim::{MotionKind, Occlusion, ScaleSpec, SceneConfig};
use crate::tracker::{BrtDomain, TrackerConfig};

/// Key/value pairs of one section, consumed as they are read.
struct Section {
    name: &'static str,
    values: BTreeMap<String, String>,
}

impl Section {
    fn take<T: FromStr>(&mut self, key: &str) -> Result<Option<T>> {
        match self.values.remove(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| Error::Config(format!("[{}] {key} = {v:?} is not valid", self.name))),
        }
    }

    fn set<T: FromStr>(&mut self, key: &str, slot: &mut T) -> Result<()> {
        if let Some(v) = self.take(key)? {
            *slot = v;
        }
        Ok(())
    }

    fn take_bool(&mut self, key: &str) -> Result<Option<bool>> {
        match self.values.remove(key).as_deref() {
            None => Ok(None),
            Some("true" | "on" | "yes" | "1") => Ok(Some(true)),
            Some("false" | "off" | "no" | "0") => Ok(Some(false)),
            Some(v) => Err(Error::Config(format!("[{}] {key} = {v:?} is not a boolean", self.name))),
        }
    }

    fn take_list<T: FromStr>(&mut self, key: &str) -> Result<Option<Vec<T>>> {
        match self.values.remove(key) {
            None => Ok(None),
            Some(v) => v
                .split(',')
                .map(|s| s.trim().parse::<T>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map(Some)
                .map_err(|_| Error::Config(format!("[{}] {key} = {v:?} is not a valid list", self.name))),
        }
    }

    fn finish(self) -> Result<()> {
        match self.values.keys().next() {
            None => Ok(()),
            Some(k) => Err(Error::Config(format!("unknown key {k:?} in [{}]", self.name))),
        }
    }
}

/// Parsed configuration file; absent sections are `None`.
#[derive(Debug, Default)]
pub struct ConfigFile {
    sections: BTreeMap<String, BTreeMap<String, String>>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        let ini = Ini::load_from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let mut sections = BTreeMap::new();
        for (name, props) in ini.iter() {
            let Some(name) = name else {
                if let Some((k, _)) = props.iter().next() {
                    return Err(Error::Config(format!("key {k:?} outside any section")));
                }
                continue;
            };
            if !matches!(name, "scene" | "tracker" | "run") {
                return Err(Error::Config(format!("unknown section [{name}]")));
            }
            let entry: &mut BTreeMap<String, String> = sections.entry(name.to_string()).or_default();
            for (k, v) in props.iter() {
                if entry.insert(k.to_string(), v.trim().to_string()).is_some() {
                    return Err(Error::Config(format!("duplicate key {k:?} in [{name}]")));
                }
            }
        }
        Ok(Self { sections })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    fn section(&self, name: &'static str) -> Section {
        Section { name, values: self.sections.get(name).cloned().unwrap_or_default() }
    }

    pub fn has_section(&self, name: &str) -> bool {
        self.sections.contains_key(name)
    }

    /// Scene settings and feature scales from `[scene]`.
    pub fn scene(&self) -> Result<(SceneConfig, ScaleSpec)> {
        let mut s = self.section("scene");
        let mut c = SceneConfig::default();
        s.set("frames", &mut c.frames)?;
        s.set("map_h", &mut c.map_h)?;
        s.set("map_w", &mut c.map_w)?;
        s.set("channels", &mut c.channels)?;
        s.set("n_distractors", &mut c.n_distractors)?;
        s.set("target_h", &mut c.target_size.0)?;
        s.set("target_w", &mut c.target_size.1)?;
        let row: Option<f64> = s.take("target_row")?;
        let col: Option<f64> = s.take("target_col")?;
        c.target_center = match (row, col) {
            (Some(r), Some(c)) => Some((r, c)),
            (None, None) => None,
            _ => return Err(Error::Config("[scene] target_row and target_col must be given together".into())),
        };
        if let Some(m) = s.values.remove("motion") {
            c.motion = MotionKind::parse(&m).ok_or_else(|| Error::Config(format!("[scene] unknown motion {m:?}")))?;
        }
        s.set("speed", &mut c.speed)?;
        s.set("distractor_speed", &mut c.distractor_speed)?;
        s.set("distractor_similarity", &mut c.distractor_similarity)?;
        let start: Option<usize> = s.take("occlusion_start")?;
        let duration: Option<usize> = s.take("occlusion_duration")?;
        let coverage: Option<f64> = s.take("occlusion_coverage")?;
        c.occlusion = match (start, duration, coverage) {
            (None, None, None) => None,
            (Some(start_frame), Some(duration), Some(coverage)) => Some(Occlusion { start_frame, duration, coverage }),
            _ => return Err(Error::Config("[scene] occlusion needs start, duration and coverage".into())),
        };
        s.set("scale_drift", &mut c.scale_drift)?;
        s.set("noise_sigma", &mut c.noise_sigma)?;
        s.set("seed", &mut c.seed)?;
        let scales = match s.take_list::<usize>("scales")? {
            None => ScaleSpec::default(),
            Some(f) => ScaleSpec::new(f.into_iter().enumerate().map(|(i, f)| (format!("scale{i}"), f)).collect())
                .map_err(|e| Error::Config(e.to_string()))?,
        };
        s.finish()?;
        c.validate().map_err(|e| Error::Config(e.to_string()))?;
        Ok((c, scales))
    }

    pub fn tracker(&self) -> Result<TrackerConfig> {
        let mut s = self.section("tracker");
        let mut c = TrackerConfig::default();
        if let Some(b) = s.take_bool("brt")? {
            c.brt_on = b;
        }
        if let Some(b) = s.take_bool("prp")? {
            c.prp_on = b;
        }
        if let Some(b) = s.take_bool("mf")? {
            c.multiscale_on = b;
        }
        s.set("brt_ratio", &mut c.brt_ratio)?;
        if let Some(d) = s.values.remove("brt_domain") {
            c.brt_domain =
                BrtDomain::parse(&d).ok_or_else(|| Error::Config(format!("[tracker] unknown brt_domain {d:?}")))?;
        }
        if let Some(b) = s.take_bool("prp_after_fusion")? {
            c.prp_after_fusion = b;
        }
        if let Some(b) = s.take_list::<f64>("fusion")? {
            c.fusion = FusionWeights::new(b).map_err(|e| Error::Config(e.to_string()))?;
        }
        s.set("update_interval", &mut c.update_interval)?;
        s.set("label_sigma_factor", &mut c.label_sigma_factor)?;
        s.set("mid_channels", &mut c.mid_channels)?;
        s.set("kernel1", &mut c.kernel1)?;
        s.set("kernel2", &mut c.kernel2)?;
        s.set("lambda1", &mut c.lambda1)?;
        s.set("lambda2", &mut c.lambda2)?;
        s.set("leaky_slope", &mut c.leaky_slope)?;
        s.set("memory_capacity", &mut c.memory_capacity)?;
        s.set("memory_decay", &mut c.memory_decay)?;
        s.set("init_iters", &mut c.init_optimizer.max_outer_iters)?;
        s.set("update_iters", &mut c.update_optimizer.max_outer_iters)?;
        if let Some(v) = s.values.remove("cg_variant") {
            let variant = match v.as_str() {
                "pr+" | "polak_ribiere" => CgVariant::PolakRibierePlus,
                "fr" | "fletcher_reeves" => CgVariant::FletcherReeves,
                _ => return Err(Error::Config(format!("[tracker] unknown cg_variant {v:?}"))),
            };
            c.init_optimizer.cg_variant = variant;
            c.update_optimizer.cg_variant = variant;
        }
        if let Some(step) = s.take::<f64>("initial_step")? {
            c.init_optimizer.line_search.initial_step = step;
            c.update_optimizer.line_search.initial_step = step;
        }
        s.set("scale_adapt", &mut c.scale_adapt)?;
        s.set("seed", &mut c.seed)?;
        s.finish()?;
        c.validate().map_err(|e| Error::Config(e.to_string()))?;
        Ok(c)
    }

    /// Full benchmark configuration; `[run]` holds `sequences`, `repeats`,
    /// `base_seed` and `output_dir`.
    pub fn run(&self) -> Result<RunConfig> {
        let (scene, scales) = self.scene()?;
        let tracker = self.tracker()?;
        let mut s = self.section("run");
        let mut c = RunConfig { scene, tracker, scales, ..RunConfig::default() };
        s.set("sequences", &mut c.sequences)?;
        s.set("repeats", &mut c.repeats)?;
        s.set("base_seed", &mut c.base_seed)?;
        c.output_dir = s.take::<PathBuf>("output_dir")?;
        s.finish()?;
        c.validate().map_err(|e| Error::Config(e.to_string()))?;
        Ok(c)
    }
}

/// `[scene]` section reproducing `cfg` and `scales` exactly.
pub fn scene_to_string(cfg: &SceneConfig, scales: &ScaleSpec) -> String {
    let mut ini = Ini::new();
    let mut sec = ini.with_section(Some("scene"));
    sec.set("frames", cfg.frames.to_string())
        .set("map_h", cfg.map_h.to_string())
        .set("map_w", cfg.map_w.to_string())
        .set("channels", cfg.channels.to_string())
        .set("n_distractors", cfg.n_distractors.to_string())
        .set("target_h", cfg.target_size.0.to_string())
        .set("target_w", cfg.target_size.1.to_string());
    if let Some((r, c)) = cfg.target_center {
        sec.set("target_row", r.to_string()).set("target_col", c.to_string());
    }
    sec.set("motion", cfg.motion.name())
        .set("speed", cfg.speed.to_string())
        .set("distractor_speed", cfg.distractor_speed.to_string())
        .set("distractor_similarity", cfg.distractor_similarity.to_string());
    if let Some(o) = cfg.occlusion {
        sec.set("occlusion_start", o.start_frame.to_string())
            .set("occlusion_duration", o.duration.to_string())
            .set("occlusion_coverage", o.coverage.to_string());
    }
    sec.set("scale_drift", cfg.scale_drift.to_string())
        .set("noise_sigma", cfg.noise_sigma.to_string())
        .set("seed", cfg.seed.to_string())
        .set("scales", scales.factors().iter().map(|f| f.to_string()).collect::<Vec<_>>().join(","));
    let mut buf = Vec::new();
    ini.write_to(&mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("ini output is utf-8")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_when_empty() {
        let f = ConfigFile::parse("").unwrap();
        assert_eq!(f.scene().unwrap(), (SceneConfig::default(), ScaleSpec::default()));
        assert_eq!(f.tracker().unwrap(), TrackerConfig::default());
    }

    #[test]
    fn parses_all_sections() {
        let text = "\
# benchmark
[scene]
frames = 30
map_h = 32
map_w = 40
motion = random_walk
occlusion_start = 3
occlusion_duration = 4
occlusion_coverage = 0.5
scales = 1, 2, 4

[tracker]
brt = off
prp = true
mf = 0
brt_domain = response
fusion = 2, 1
init_iters = 7
cg_variant = fr

[run]
sequences = 5
base_seed = 100
";
        let f = ConfigFile::parse(text).unwrap();
        let run = f.run().unwrap();
        assert_eq!(run.scene.frames, 30);
        assert_eq!((run.scene.map_h, run.scene.map_w), (32, 40));
        assert_eq!(run.scene.motion, MotionKind::RandomWalk);
        assert_eq!(run.scene.occlusion, Some(Occlusion { start_frame: 3, duration: 4, coverage: 0.5 }));
        assert_eq!(run.scales.factors(), vec![1, 2, 4]);
        assert!(!run.tracker.brt_on && run.tracker.prp_on && !run.tracker.multiscale_on);
        assert_eq!(run.tracker.brt_domain, BrtDomain::Response);
        assert_eq!(run.tracker.fusion.raw(), &[2.0, 1.0]);
        assert_eq!(run.tracker.init_optimizer.max_outer_iters, 7);
        assert_eq!(run.tracker.update_optimizer.cg_variant, CgVariant::FletcherReeves);
        assert_eq!((run.sequences, run.base_seed), (5, 100));
    }

    #[test]
    fn rejects_bad_input() {
        for text in [
            "[scene]\nframes = many\n",
            "[scene]\nbogus = 1\n",
            "[nowhere]\nx = 1\n",
            "[tracker]\nbrt = maybe\n",
            "[scene]\nmotion = teleport\n",
            "[scene]\ndistractor_similarity = 2\n",
            "[scene]\ntarget_row = 3\n",
            "[run]\nrepeats = 0\n",
            "[tracker]\nupdate_interval = 0\n",
        ] {
            let err = ConfigFile::parse(text).and_then(|f| f.run()).unwrap_err();
            assert!(matches!(err, Error::Config(_)), "{text}: {err}");
        }
    }

    #[test]
    fn scene_round_trip() {
        let cfg = SceneConfig {
            target_center: Some((20.5, 11.25)),
            occlusion: Some(Occlusion { start_frame: 2, duration: 3, coverage: 0.3 }),
            noise_sigma: 0.1 + 0.2,
            seed: u64::MAX,
            ..SceneConfig::default()
        };
        let scales = ScaleSpec::new(vec![("scale0".into(), 1), ("scale1".into(), 3)]).unwrap();
        let text = scene_to_string(&cfg, &scales);
        let (back, back_scales) = ConfigFile::parse(&text).unwrap().scene().unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back_scales, scales);
    }
}
