use chrono::{Datelike, Duration, NaiveDate, NaiveDateTime, NaiveTime, Weekday};
use rand::seq::IndexedRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{Location, WeatherConfig};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Question {
    General,
    /// "Will it rain?" style; holds the asked-about condition.
    Boolean(String),
    Attire(String),
    Activity(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QueryScenario {
    pub query: String,
    pub reference: NaiveDateTime,
    /// Where the forecast is requested for.
    pub location: Location,
    /// The user's own location from the context.
    pub home: Location,
    pub start: NaiveDateTime,
    pub days: u32,
    pub question: Question,
    pub unknown_location: bool,
}

impl QueryScenario {
    pub fn days_ahead(&self) -> i64 {
        (self.start.date() - self.reference.date()).num_days()
    }

    pub fn out_of_range(&self, config: &WeatherConfig) -> bool {
        self.days_ahead() > config.max_days_ahead
    }

    /// Single-day requests starting within a day of the reference time get
    /// hourly forecasts.
    pub fn hourly(&self) -> bool {
        self.days == 1 && self.start - self.reference < Duration::hours(24)
    }

    pub fn dates(&self) -> impl Iterator<Item = NaiveDate> + '_ {
        (0..self.days as i64).map(move |d| self.start.date() + Duration::days(d))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Granularity {
    Hourly,
    Daily,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForecastPoint {
    pub time: NaiveDateTime,
    /// The hour's temperature, or the daily high.
    pub temp: f64,
    /// Daily low; equals `temp` for hourly points.
    pub temp_low: f64,
    pub cloud_coverage: f64,
    pub precip_chance: f64,
    pub precip_type: Option<String>,
    pub wind_speed: f64,
    /// Rarer conditions such as fog.
    pub rare: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SunTimes {
    pub date: NaiveDate,
    pub sunrise: NaiveTime,
    pub sunset: NaiveTime,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Forecast {
    pub granularity: Granularity,
    pub points: Vec<ForecastPoint>,
    pub sun: Vec<SunTimes>,
    pub location: Location,
}

const HOURLY_POINTS: i64 = 12;

fn weekday_name(w: Weekday) -> &'static str {
    match w {
        Weekday::Mon => "Monday",
        Weekday::Tue => "Tuesday",
        Weekday::Wed => "Wednesday",
        Weekday::Thu => "Thursday",
        Weekday::Fri => "Friday",
        Weekday::Sat => "Saturday",
        Weekday::Sun => "Sunday",
    }
}

pub(super) fn weekday_of(d: NaiveDate) -> &'static str {
    weekday_name(d.weekday())
}

pub(super) fn month_name(d: NaiveDate) -> &'static str {
    [
        "January",
        "February",
        "March",
        "April",
        "May",
        "June",
        "July",
        "August",
        "September",
        "October",
        "November",
        "December",
    ][d.month0() as usize]
}

const ATTIRE: &[&str] = &["umbrella", "raincoat", "sunglasses", "sunscreen", "jacket", "boots"];
const ACTIVITIES: &[&str] = &["hiking", "a picnic", "biking", "the beach"];
const ASKABLE: &[&str] = &["rain", "snow", "sunny", "cloudy", "fog"];

fn when_phrase(s: &QueryScenario) -> String {
    match (s.days_ahead(), s.days) {
        (0, 1) => "today".into(),
        (1, 1) => "tomorrow".into(),
        (_, 1) => format!("on {}", weekday_of(s.start.date())),
        (_, n) => format!(
            "from {} to {}",
            weekday_of(s.start.date()),
            weekday_of(s.start.date() + Duration::days(n as i64 - 1))
        ),
    }
}

fn query_text(s: &QueryScenario) -> String {
    let when = when_phrase(s);
    let place = &s.location.city;
    match &s.question {
        Question::General => format!("what's the weather in {place} {when}?"),
        Question::Boolean(c) if c == "sunny" || c == "cloudy" => format!("will it be {c} in {place} {when}?"),
        Question::Boolean(c) if c == "fog" => format!("will there be fog in {place} {when}?"),
        Question::Boolean(c) => format!("will it {c} in {place} {when}?"),
        Question::Attire(a) => format!("should I bring {a} to {place} {when}?"),
        Question::Activity(a) => format!("is it a good day for {a} in {place} {when}?"),
    }
}

pub fn sample_scenario<R: Rng>(rng: &mut R, config: &WeatherConfig) -> QueryScenario {
    let base = NaiveDate::from_ymd_opt(2026, 1, 1).expect("valid date");
    let reference_date = base + Duration::days(rng.random_range(0..365));
    let reference = reference_date
        .and_hms_opt(rng.random_range(6..21), [0, 15, 30, 45][rng.random_range(0..4)], 0)
        .expect("valid time");
    let home = config.locations.choose(rng).expect("at least one location").clone();
    let unknown_location = !config.unknown_locations.is_empty() && rng.random_bool(config.unknown_location_prob);
    let location = if unknown_location {
        config.unknown_locations.choose(rng).expect("non-empty").clone()
    } else if rng.random_bool(0.5) {
        home.clone()
    } else {
        config.locations.choose(rng).expect("non-empty").clone()
    };
    let out_of_range = rng.random_bool(config.out_of_range_prob);
    let days_ahead = if out_of_range {
        config.max_days_ahead + rng.random_range(1..8)
    } else {
        *[0i64, 0, 0, 1, 1, 2, 3, 4, 5].choose(rng).expect("non-empty")
    };
    let max_days = (config.max_days_ahead - days_ahead + 1).max(1);
    let days = [1u32, 1, 1, 1, 1, 2, 2, 3, 3, 5].choose(rng).copied().expect("non-empty").min(max_days as u32);
    let start = if days_ahead == 0 {
        reference
    } else {
        (reference_date + Duration::days(days_ahead)).and_hms_opt(7, 0, 0).expect("valid time")
    };
    let r: f64 = rng.random();
    let question = if r < config.boolean_prob {
        Question::Boolean(ASKABLE.choose(rng).expect("non-empty").to_string())
    } else if r < config.boolean_prob + config.attire_prob {
        Question::Attire(ATTIRE.choose(rng).expect("non-empty").to_string())
    } else if r < config.boolean_prob + config.attire_prob + config.activity_prob {
        Question::Activity(ACTIVITIES.choose(rng).expect("non-empty").to_string())
    } else {
        Question::General
    };
    let mut s =
        QueryScenario { query: String::new(), reference, location, home, start, days, question, unknown_location };
    s.query = query_text(&s);
    s
}

fn round_to(x: f64, step: f64) -> f64 {
    (x / step).round() * step
}

fn point<R: Rng>(
    rng: &mut R,
    config: &WeatherConfig,
    time: NaiveDateTime,
    climate: f64,
    cloud_base: f64,
    daily: bool,
) -> ForecastPoint {
    let noise = Normal::new(0.0, 6.0).expect("valid normal");
    let t = config.temperature.clone();
    let temp = (climate + noise.sample(rng)).clamp(t.min, t.max).round();
    let temp_low = if daily { (temp - 8.0 - 6.0 * rng.random::<f64>()).clamp(t.min, t.max).round() } else { temp };
    let cc = &config.cloud_coverage;
    let cloud = (cloud_base + Normal::new(0.0, 12.0).expect("valid normal").sample(rng)).clamp(cc.min, cc.max).round();
    // precipitation follows the clouds
    let precip_chance = round_to(((cloud - 35.0) * 1.3 + noise.sample(rng) * 2.0).clamp(0.0, 100.0), 10.0);
    let precip_type = (precip_chance >= 30.0).then(|| if temp_low <= 34.0 { "snow" } else { "rain" }.to_string());
    let rare = (cloud > 60.0 && (35.0..=65.0).contains(&temp) && rng.random_bool(0.15)).then(|| "fog".to_string());
    ForecastPoint {
        time,
        temp,
        temp_low,
        cloud_coverage: cloud,
        precip_chance,
        precip_type,
        wind_speed: config.wind_speed.sample(rng).round(),
        rare,
    }
}

pub fn generate_forecast<R: Rng>(scenario: &QueryScenario, config: &WeatherConfig, rng: &mut R) -> Forecast {
    let climate = config.temperature.sample(rng);
    let cloud_base = config.cloud_coverage.sample(rng);
    let (granularity, points) = if scenario.hourly() {
        let pts: Vec<ForecastPoint> = (0..HOURLY_POINTS)
            .map(|h| point(rng, config, scenario.start + Duration::hours(h), climate, cloud_base, false))
            .collect();
        (Granularity::Hourly, pts)
    } else {
        let pts: Vec<ForecastPoint> = scenario
            .dates()
            .collect::<Vec<_>>()
            .into_iter()
            .map(|d| {
                let time = d.and_hms_opt(12, 0, 0).expect("valid time");
                // day-to-day cloud drift makes multi-day ranges vary
                let drift = Normal::new(cloud_base, 25.0).expect("valid normal").sample(rng);
                point(rng, config, time, climate, drift, true)
            })
            .collect();
        (Granularity::Daily, pts)
    };
    let mut days: Vec<NaiveDate> = points.iter().map(|p: &ForecastPoint| p.time.date()).collect();
    days.dedup();
    let sun = days
        .into_iter()
        .map(|date| SunTimes {
            date,
            sunrise: NaiveTime::from_hms_opt(rng.random_range(5..8), rng.random_range(0..60), 0).expect("valid"),
            sunset: NaiveTime::from_hms_opt(rng.random_range(17..21), rng.random_range(0..60), 0).expect("valid"),
        })
        .collect();
    Forecast { granularity, points, sun, location: scenario.location.clone() }
}
