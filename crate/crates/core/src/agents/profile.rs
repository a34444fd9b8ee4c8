#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AgentClass {
    Car,
    Bus,
    Bicycle,
    Motorcycle,
    Pedestrian,
}

impl AgentClass {
    pub const ALL: [AgentClass; 5] =
        [AgentClass::Car, AgentClass::Bus, AgentClass::Bicycle, AgentClass::Motorcycle, AgentClass::Pedestrian];

    pub fn name(self) -> &'static str {
        match self {
            AgentClass::Car => "car",
            AgentClass::Bus => "bus",
            AgentClass::Bicycle => "bicycle",
            AgentClass::Motorcycle => "motorcycle",
            AgentClass::Pedestrian => "pedestrian",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        AgentClass::ALL.into_iter().find(|c| c.name() == s)
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn is_vehicle(self) -> bool {
        self != AgentClass::Pedestrian
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AgentProfile {
    pub class: AgentClass,
    pub half_length: f64,
    pub half_width: f64,
    pub max_speed: f64,
    pub max_accel: f64,
    pub max_steer: f64,
    /// Zero for pedestrians.
    pub wheelbase: f64,
    pub responsibility: f64,
    /// Per-step probability of reacting to a given neighbor.
    pub attention: f64,
}

impl AgentProfile {
    pub fn default_for(class: AgentClass) -> Self {
        let (hl, hw, vmax, acc, steer, wb, resp) = match class {
            AgentClass::Car => (2.3, 0.95, 6.0, 3.0, 0.6, 2.7, 0.5),
            AgentClass::Bus => (5.5, 1.25, 5.0, 2.0, 0.6, 6.0, 0.4),
            AgentClass::Bicycle => (0.9, 0.3, 3.0, 2.0, 0.7, 1.2, 0.5),
            AgentClass::Motorcycle => (1.1, 0.4, 6.0, 3.5, 0.7, 1.5, 0.5),
            AgentClass::Pedestrian => (0.3, 0.3, 1.5, 1.5, 0.0, 0.0, 0.5),
        };
        AgentProfile {
            class,
            half_length: hl,
            half_width: hw,
            max_speed: vmax,
            max_accel: acc,
            max_steer: steer,
            wheelbase: wb,
            responsibility: resp,
            attention: 1.0,
        }
    }

    pub fn circumradius(&self) -> f64 {
        if self.class == AgentClass::Pedestrian {
            self.half_width
        } else {
            crate::math::sqrt(self.half_length * self.half_length + self.half_width * self.half_width)
        }
    }

    /// Cruising speed agents aim for.
    pub fn pref_speed(&self) -> f64 {
        self.max_speed
    }

    pub fn validate(&self) -> Result<(), &'static str> {
        let finite = [
            self.half_length,
            self.half_width,
            self.max_speed,
            self.max_accel,
            self.max_steer,
            self.wheelbase,
            self.responsibility,
            self.attention,
        ]
        .iter()
        .all(|x| x.is_finite());
        if !finite {
            return Err("non-finite profile value");
        }
        if self.half_length <= 0.0 || self.half_width <= 0.0 || self.max_speed <= 0.0 || self.max_accel <= 0.0 {
            return Err("dimensions, max_speed and max_accel must be positive");
        }
        if self.class.is_vehicle() && (self.wheelbase <= 0.0 || self.max_steer <= 0.0) {
            return Err("vehicles need positive wheelbase and max_steer");
        }
        if !(0.0..=1.0).contains(&self.responsibility) || !(0.0..=1.0).contains(&self.attention) {
            return Err("responsibility and attention must lie in [0, 1]");
        }
        Ok(())
    }
}

/// One profile per class.
#[derive(Clone, Debug, PartialEq)]
pub struct ProfileTable {
    profiles: [AgentProfile; 5],
}

impl Default for ProfileTable {
    fn default() -> Self {
        ProfileTable { profiles: AgentClass::ALL.map(AgentProfile::default_for) }
    }
}

impl ProfileTable {
    pub fn get(&self, class: AgentClass) -> &AgentProfile {
        &self.profiles[class.index()]
    }

    pub fn set(&mut self, profile: AgentProfile) {
        self.profiles[profile.class.index()] = profile;
    }
}
