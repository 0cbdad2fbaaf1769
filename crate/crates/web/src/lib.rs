//! Browser demo: quench a random lattice, watch it coarsen, and click a
//! window to see how it classifies.

use wasm_bindgen::prelude::*;
use zising_core::{
    classify_window, init_random, ContourTracker, Engine, LatticeGeometry, RngSpec, SimState, Site, StreamRng,
    Window, WindowReport,
};

const PLUS: [u8; 4] = [0xf4, 0xf1, 0xe8, 0xff];
const MINUS: [u8; 4] = [0x22, 0x3a, 0x5e, 0xff];
const WALL: [u8; 4] = [0xd9, 0x48, 0x3b, 0xff];

#[wasm_bindgen]
pub struct Demo {
    state: SimState,
    tracker: ContourTracker,
    rng: StreamRng,
    times: Vec<f64>,
    wall_density: Vec<f64>,
    corner_density: Vec<f64>,
    persistence: Vec<f64>,
}

#[wasm_bindgen]
impl Demo {
    /// Quench: a fresh `size x size` torus with i.i.d. spins, +1 with
    /// probability `p_plus`.
    #[wasm_bindgen(constructor)]
    pub fn new(size: usize, p_plus: f64, seed: u64) -> Result<Demo, JsError> {
        let g = LatticeGeometry::torus(size, size)?;
        let spec = RngSpec::new(seed, 0);
        let config = init_random(g, p_plus, &spec)?;
        let tracker = ContourTracker::from_config(&config);
        let mut demo = Demo {
            state: SimState::new(config, Engine::ActiveSet),
            tracker,
            rng: spec.dynamics_rng(),
            times: Vec::new(),
            wall_density: Vec::new(),
            corner_density: Vec::new(),
            persistence: Vec::new(),
        };
        demo.sample();
        Ok(demo)
    }

    pub fn size(&self) -> usize {
        self.state.config().geometry().width()
    }

    pub fn time(&self) -> f64 {
        self.state.time()
    }

    pub fn absorbed(&self) -> bool {
        self.state.is_absorbed()
    }

    /// Run the dynamics for `dt` more time units; returns the number of
    /// flips.
    pub fn advance(&mut self, dt: f64) -> u32 {
        let t_end = self.state.time() + dt;
        let tracker = &mut self.tracker;
        let mut flips = 0;
        self.state.run_until(t_end, &mut self.rng, |st, ev| {
            if ev.flipped {
                tracker.apply_flip(st.config().geometry().index(ev.site));
                flips += 1;
            }
        });
        self.sample();
        flips
    }

    /// RGBA pixels, one per site, top row first; with `walls` set, sites
    /// with a disagreeing neighbor are highlighted.
    pub fn render(&self, walls: bool) -> Vec<u8> {
        let c = self.state.config();
        let g = c.geometry();
        let (w, h) = (g.width(), g.height());
        let mut px = Vec::with_capacity(w * h * 4);
        for row in 0..h {
            let y = h - 1 - row;
            for x in 0..w {
                let i = g.index(Site::new(x, y));
                let color = if walls && c.disagreements(i).0 > 0 {
                    WALL
                } else if c.is_plus(i) {
                    PLUS
                } else {
                    MINUS
                };
                px.extend_from_slice(&color);
            }
        }
        px
    }

    /// Classify the window of half-width `l` around site `(x, y)` (y up);
    /// returns JSON with the window class and the wall report.
    pub fn classify(&self, x: usize, y: usize, l: usize) -> Result<String, JsError> {
        let c = self.state.config();
        let window = Window::new(c.geometry(), Site::new(x, y), l)?;
        let class = classify_window(c, &window);
        let report = WindowReport::new(c, &window);
        let json = serde_json::json!({
            "class": class.kind().name(),
            "absorbing": class.is_absorbing(),
            "report": report,
        });
        Ok(json.to_string())
    }

    pub fn times(&self) -> Vec<f64> {
        self.times.clone()
    }

    pub fn wall_density_series(&self) -> Vec<f64> {
        self.wall_density.clone()
    }

    pub fn corner_density_series(&self) -> Vec<f64> {
        self.corner_density.clone()
    }

    pub fn persistence_series(&self) -> Vec<f64> {
        self.persistence.clone()
    }
}

impl Demo {
    fn sample(&mut self) {
        self.times.push(self.state.time());
        self.wall_density.push(self.state.wall_density());
        self.corner_density.push(self.tracker.corner_density());
        self.persistence.push(self.state.stats().persistence_fraction());
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn demo_coarsens_and_classifies() {
        let mut d = Demo::new(32, 0.5, 1).unwrap();
        assert_eq!(d.render(false).len(), 32 * 32 * 4);
        let rho0 = d.wall_density_series()[0];
        assert!(d.advance(4.0) > 0);
        assert!(d.wall_density_series()[1] < rho0);
        assert_eq!(d.times().len(), 2);
        assert!(d.persistence_series()[1] < 1.0);
        assert_eq!(d.corner_density_series().len(), 2);
        let v: serde_json::Value = serde_json::from_str(&d.classify(16, 16, 2).unwrap()).unwrap();
        assert!(v["class"].is_string());
        assert!(v["report"]["M_L"].is_u64());
    }
}
