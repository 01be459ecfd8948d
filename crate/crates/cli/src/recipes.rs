//! Figure-reproduction configs shipped in `docs/recipes/`.
//!
//! Each recipe is an ordinary config whose first line names the command,
//! `# command: <simulate|scan|predict>`, followed by a one-line description.

pub struct Recipe {
    pub name: &'static str,
    pub text: &'static str,
}

macro_rules! recipes {
    ($($name:literal),* $(,)?) => {
        &[$(Recipe {
            name: $name,
            text: include_str!(concat!("../../../docs/recipes/", $name, ".conf")),
        }),*]
    };
}

pub const RECIPES: &[Recipe] = recipes![
    "fig1a_period_sweep",
    "fig1b_stable",
    "fig1b_near_resonant",
    "fig1b_resonant",
    "fig2_coupling_sweep",
    "fig3b_energy_k1",
    "fig3b_energy_k2",
    "fig4a_beating",
    "fig4b_near_l2",
    "fig5a_antiresonance_sweep",
    "predict_period",
    "predict_two_mode",
];

impl Recipe {
    fn header(&self, index: usize) -> &'static str {
        self.text
            .lines()
            .nth(index)
            .and_then(|l| l.strip_prefix('#'))
            .map_or("", str::trim)
    }

    pub fn command(&self) -> &'static str {
        self.header(0).strip_prefix("command:").map_or("", str::trim)
    }

    pub fn description(&self) -> &'static str {
        self.header(1)
    }
}

pub fn find(name: &str) -> Option<&'static Recipe> {
    RECIPES.iter().find(|r| r.name == name)
}
