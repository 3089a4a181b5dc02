//! A small household text world: receptacles, objects, one carried item and
//! four task kinds. Feedback follows the phrasing of the ALFWorld text
//! engine so the few-shot regexes work on it unchanged.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{sha256_hex, Env, EnvError, EnvStep, Reset};

pub const NOTHING_HAPPENS: &str = "Nothing happens.";
const ROOM_PREFIX: &str = "You are in the middle of a room. Looking quickly around you, you see ";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReceptacleSpec {
    pub id: String,
    #[serde(default)]
    pub openable: bool,
    #[serde(default)]
    pub initially_closed: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObjectSpec {
    pub id: String,
    pub location: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    PickPlace,
    PickTwoPlace,
    CoolPlace,
    HeatPlace,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskSpec {
    pub kind: TaskKind,
    pub object_class: String,
    /// A receptacle id (`dresser 1`) or class (`dresser`).
    pub target: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridHouseConfig {
    pub receptacles: Vec<ReceptacleSpec>,
    pub objects: Vec<ObjectSpec>,
    pub task: TaskSpec,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("the house has no receptacles")]
    Empty,
    #[error("id '{0}' is not of the form 'class N'")]
    BadId(String),
    #[error("duplicate id '{0}'")]
    Duplicate(String),
    #[error("object '{object}' is placed in unknown receptacle '{location}'")]
    UnknownLocation { object: String, location: String },
    #[error("receptacle '{0}' starts closed but is not openable")]
    ClosedNotOpenable(String),
    #[error("task target '{0}' matches no receptacle")]
    UnknownTarget(String),
    #[error("task needs {needed} '{class}' object(s), the house has {found}")]
    NotEnoughObjects { class: String, needed: usize, found: usize },
    #[error("task needs a '{0}' receptacle")]
    MissingAppliance(&'static str),
    #[error("invalid config JSON: {0}")]
    Json(String),
}

/// Split `alarmclock 2` into its class. Classes are lowercase letters.
pub fn class_of(id: &str) -> Option<&str> {
    let (class, n) = id.rsplit_once(' ')?;
    let ok = !class.is_empty()
        && class.bytes().all(|b| b.is_ascii_lowercase())
        && !n.is_empty()
        && n.bytes().all(|b| b.is_ascii_digit());
    ok.then_some(class)
}

impl GridHouseConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        serde_json::from_str(text).map_err(|e| ConfigError::Json(e.to_string()))
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.receptacles.is_empty() {
            return Err(ConfigError::Empty);
        }
        let mut seen = std::collections::HashSet::new();
        let ids = self.receptacles.iter().map(|r| &r.id).chain(self.objects.iter().map(|o| &o.id));
        for id in ids {
            if class_of(id).is_none() {
                return Err(ConfigError::BadId(id.clone()));
            }
            if !seen.insert(id.as_str()) {
                return Err(ConfigError::Duplicate(id.clone()));
            }
        }
        for r in &self.receptacles {
            if r.initially_closed && !r.openable {
                return Err(ConfigError::ClosedNotOpenable(r.id.clone()));
            }
        }
        for o in &self.objects {
            if !self.receptacles.iter().any(|r| r.id == o.location) {
                return Err(ConfigError::UnknownLocation {
                    object: o.id.clone(),
                    location: o.location.clone(),
                });
            }
        }
        let t = &self.task;
        if !self.receptacles.iter().any(|r| target_matches(&t.target, &r.id)) {
            return Err(ConfigError::UnknownTarget(t.target.clone()));
        }
        let needed = if t.kind == TaskKind::PickTwoPlace { 2 } else { 1 };
        let found = self
            .objects
            .iter()
            .filter(|o| class_of(&o.id) == Some(t.object_class.as_str()))
            .count();
        if found < needed {
            return Err(ConfigError::NotEnoughObjects {
                class: t.object_class.clone(),
                needed,
                found,
            });
        }
        let appliance = match t.kind {
            TaskKind::CoolPlace => Some("fridge"),
            TaskKind::HeatPlace => Some("microwave"),
            _ => None,
        };
        if let Some(a) = appliance {
            if !self.receptacles.iter().any(|r| class_of(&r.id) == Some(a)) {
                return Err(ConfigError::MissingAppliance(a));
            }
        }
        Ok(())
    }

    pub fn instruction(&self) -> String {
        let t = &self.task;
        let what = match t.kind {
            TaskKind::PickPlace => format!("a {}", t.object_class),
            TaskKind::PickTwoPlace => format!("two {}", t.object_class),
            TaskKind::CoolPlace => format!("a cool {}", t.object_class),
            TaskKind::HeatPlace => format!("a hot {}", t.object_class),
        };
        format!("Your task is to: put {what} in {}.", t.target)
    }

    /// The bedroom of the two-alarmclock walkthrough.
    pub fn case_study() -> Self {
        let closed = |id: &str| ReceptacleSpec {
            id: id.into(),
            openable: true,
            initially_closed: true,
        };
        let surface = |id: &str| ReceptacleSpec {
            id: id.into(),
            openable: false,
            initially_closed: false,
        };
        let obj = |id: &str, loc: &str| ObjectSpec {
            id: id.into(),
            location: loc.into(),
        };
        GridHouseConfig {
            receptacles: vec![
                surface("bed 1"),
                surface("desk 1"),
                closed("drawer 5"),
                closed("drawer 4"),
                closed("drawer 3"),
                closed("drawer 2"),
                closed("drawer 1"),
                surface("dresser 1"),
                surface("garbagecan 1"),
                surface("laundryhamper 1"),
                surface("shelf 1"),
            ],
            objects: vec![
                obj("cellphone 1", "bed 1"),
                obj("pillow 1", "bed 1"),
                obj("alarmclock 3", "desk 1"),
                obj("alarmclock 2", "desk 1"),
                obj("alarmclock 1", "desk 1"),
                obj("pencil 1", "desk 1"),
                obj("creditcard 1", "drawer 2"),
                obj("book 1", "shelf 1"),
            ],
            task: TaskSpec {
                kind: TaskKind::PickTwoPlace,
                object_class: "alarmclock".into(),
                target: "dresser".into(),
            },
        }
    }
}

fn target_matches(target: &str, receptacle: &str) -> bool {
    receptacle == target || class_of(receptacle) == Some(target)
}

#[derive(Debug, Clone)]
struct Receptacle {
    id: String,
    class: String,
    openable: bool,
    closed: bool,
    contents: Vec<usize>,
}

#[derive(Debug, Clone)]
struct Object {
    id: String,
    class: String,
    cooled: bool,
    heated: bool,
}

#[derive(Debug, Clone)]
pub struct GridHouse {
    config: GridHouseConfig,
    hash: String,
    receptacles: Vec<Receptacle>,
    objects: Vec<Object>,
    at: Option<usize>,
    holding: Option<usize>,
    reward: f64,
    done: bool,
}

/// `a A, a B, and a C` in ALFWorld style.
fn listing(items: &[&str]) -> String {
    match items {
        [] => "nothing".into(),
        [one] => format!("a {one}"),
        [init @ .., last] => {
            let mut s: String = init.iter().map(|i| format!("a {i}, ")).collect();
            s.push_str("and a ");
            s.push_str(last);
            s
        }
    }
}

impl GridHouse {
    pub fn new(config: GridHouseConfig) -> Result<Self, ConfigError> {
        config.validate()?;
        let hash = sha256_hex(&serde_json::to_vec(&config).expect("config serializes"));
        let mut env = GridHouse {
            config,
            hash,
            receptacles: Vec::new(),
            objects: Vec::new(),
            at: None,
            holding: None,
            reward: 0.0,
            done: false,
        };
        env.restore();
        Ok(env)
    }

    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        GridHouse::new(GridHouseConfig::from_json(text)?)
    }

    pub fn config(&self) -> &GridHouseConfig {
        &self.config
    }

    pub fn instruction(&self) -> String {
        self.config.instruction()
    }

    fn restore(&mut self) {
        self.receptacles = self
            .config
            .receptacles
            .iter()
            .map(|r| Receptacle {
                id: r.id.clone(),
                class: class_of(&r.id).unwrap_or_default().to_string(),
                openable: r.openable,
                closed: r.initially_closed,
                contents: Vec::new(),
            })
            .collect();
        self.objects.clear();
        for o in &self.config.objects {
            let idx = self.objects.len();
            self.objects.push(Object {
                id: o.id.clone(),
                class: class_of(&o.id).unwrap_or_default().to_string(),
                cooled: false,
                heated: false,
            });
            if let Some(r) = self.receptacles.iter_mut().find(|r| r.id == o.location) {
                r.contents.push(idx);
            }
        }
        self.at = None;
        self.holding = None;
        self.reward = 0.0;
        self.done = false;
    }

    pub fn room_observation(&self) -> String {
        let ids: Vec<&str> = self.receptacles.iter().map(|r| r.id.as_str()).collect();
        format!("{ROOM_PREFIX}{}.", listing(&ids))
    }

    fn receptacle(&self, id: &str) -> Option<usize> {
        self.receptacles.iter().position(|r| r.id == id)
    }

    fn contents_listing(&self, r: usize) -> String {
        let ids: Vec<&str> = self.receptacles[r]
            .contents
            .iter()
            .map(|&o| self.objects[o].id.as_str())
            .collect();
        listing(&ids)
    }

    fn describe(&self, r: usize) -> String {
        let rec = &self.receptacles[r];
        if rec.closed {
            format!("The {} is closed.", rec.id)
        } else if rec.openable {
            format!("The {} is open. In it, you see {}.", rec.id, self.contents_listing(r))
        } else {
            format!("On the {}, you see {}.", rec.id, self.contents_listing(r))
        }
    }

    /// The receptacle named `id`, if the agent stands at it.
    fn here(&self, id: &str) -> Option<usize> {
        self.at.filter(|&r| self.receptacles[r].id == id)
    }

    fn held(&self, id: &str) -> Option<usize> {
        self.holding.filter(|&o| self.objects[o].id == id)
    }

    /// Apply one action; `None` means nothing happens.
    fn apply(&mut self, action: &str) -> Option<String> {
        if let Some(x) = action.strip_prefix("go to ") {
            let r = self.receptacle(x)?;
            if self.at == Some(r) {
                return None;
            }
            self.at = Some(r);
            return Some(format!("You arrive at {x}. {}", self.describe(r)));
        }
        if let Some(x) = action.strip_prefix("open ") {
            let r = self.here(x)?;
            let rec = &mut self.receptacles[r];
            if !(rec.openable && rec.closed) {
                return None;
            }
            rec.closed = false;
            return Some(format!("You open the {x}. {}", self.describe(r)));
        }
        if let Some(x) = action.strip_prefix("close ") {
            let r = self.here(x)?;
            let rec = &mut self.receptacles[r];
            if !rec.openable || rec.closed {
                return None;
            }
            rec.closed = true;
            return Some(format!("You close the {x}."));
        }
        if let Some(x) = action.strip_prefix("examine ") {
            let r = self.here(x)?;
            return Some(self.describe(r));
        }
        if let Some((o, x)) = action.strip_prefix("take ").and_then(|s| s.split_once(" from ")) {
            let r = self.here(x)?;
            if self.holding.is_some() || self.receptacles[r].closed {
                return None;
            }
            let pos = self.receptacles[r]
                .contents
                .iter()
                .position(|&i| self.objects[i].id == o)?;
            let obj = self.receptacles[r].contents.remove(pos);
            self.holding = Some(obj);
            return Some(format!("You pick up the {o} from the {x}."));
        }
        if let Some((o, x)) = action.strip_prefix("move ").and_then(|s| s.split_once(" to ")) {
            let r = self.here(x)?;
            let obj = self.held(o)?;
            if self.receptacles[r].closed {
                return None;
            }
            self.receptacles[r].contents.push(obj);
            self.holding = None;
            return Some(format!("You move the {o} to the {x}."));
        }
        if let Some((o, x)) = action.strip_prefix("cool ").and_then(|s| s.split_once(" with ")) {
            let r = self.here(x)?;
            let obj = self.held(o)?;
            if self.receptacles[r].class != "fridge" {
                return None;
            }
            self.objects[obj].cooled = true;
            return Some(format!("You cool the {o} using the {x}."));
        }
        if let Some((o, x)) = action.strip_prefix("heat ").and_then(|s| s.split_once(" with ")) {
            let r = self.here(x)?;
            let obj = self.held(o)?;
            if self.receptacles[r].class != "microwave" {
                return None;
            }
            self.objects[obj].heated = true;
            return Some(format!("You heat the {o} using the {x}."));
        }
        match action {
            "inventory" => Some(match self.holding {
                Some(o) => format!("You are carrying: a {}.", self.objects[o].id),
                None => "You are not carrying anything.".into(),
            }),
            "look" => Some(match self.at {
                Some(r) => format!("You are facing the {}. Next to it, you see nothing.", self.receptacles[r].id),
                None => self.room_observation(),
            }),
            _ => None,
        }
    }

    /// Task progress in [0, 1] for the current state.
    fn progress(&self) -> f64 {
        let t = &self.config.task;
        let placed = self
            .receptacles
            .iter()
            .filter(|r| target_matches(&t.target, &r.id))
            .flat_map(|r| r.contents.iter())
            .map(|&o| &self.objects[o])
            .filter(|o| o.class == t.object_class)
            .filter(|o| match t.kind {
                TaskKind::CoolPlace => o.cooled,
                TaskKind::HeatPlace => o.heated,
                TaskKind::PickPlace | TaskKind::PickTwoPlace => true,
            })
            .count();
        match t.kind {
            TaskKind::PickTwoPlace => placed.min(2) as f64 * 0.5,
            _ => placed.min(1) as f64,
        }
    }
}

impl Env for GridHouse {
    fn reset(&mut self) -> Result<Reset, EnvError> {
        self.restore();
        Ok(Reset {
            instruction: self.instruction(),
            observation: self.room_observation(),
        })
    }

    fn step(&mut self, action: &str) -> Result<EnvStep, EnvError> {
        if self.done {
            return Ok(EnvStep {
                observation: NOTHING_HAPPENS.into(),
                reward: self.reward,
                done: true,
            });
        }
        let observation = self.apply(action.trim()).unwrap_or_else(|| NOTHING_HAPPENS.into());
        // progress can drop when an object is taken back out; reward keeps the best
        self.reward = self.reward.max(self.progress());
        self.done = self.reward >= 1.0;
        Ok(EnvStep {
            observation,
            reward: self.reward,
            done: self.done,
        })
    }

    fn env_id(&self) -> String {
        "gridhouse".into()
    }

    fn config_hash(&self) -> String {
        self.hash.clone()
    }
}
