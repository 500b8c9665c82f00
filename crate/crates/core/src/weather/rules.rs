use chrono::{Datelike, Duration, NaiveDate, NaiveTime, Timelike, Weekday};
use rand::Rng;

use super::forecast::{month_name, weekday_of};
use super::{Forecast, ForecastPoint, Granularity, Location, QueryScenario, Question, SunTimes, WeatherConfig};
use crate::mr::{MrNode, MrTree};
use crate::ontology::JOIN;

/// Aggregated weather for one day, or for a few hours of an hourly
/// forecast.
#[derive(Clone, Debug, PartialEq)]
pub struct Period {
    pub date: MrNode,
    pub condition: String,
    pub precip_type: Option<String>,
    pub precip_chance: u32,
    pub temp_high: i64,
    pub temp_low: i64,
    pub hourly: bool,
    pub wind: Option<i64>,
    pub sun: Option<SunTimes>,
}

const HOURS_PER_PERIOD: usize = 6;
const WINDY: f64 = 20.0;

pub fn precip_bucket(chance: u32) -> &'static str {
    match chance {
        0..=29 => "unlikely",
        30..=49 => "chance",
        50..=74 => "likely",
        _ => "very likely",
    }
}

/// Dates are aggregated when they agree after bucketing: same condition
/// and precipitation, same 10-degree band for the high, same precipitation
/// likelihood.
pub fn similar_periods(a: &Period, b: &Period) -> bool {
    a.condition == b.condition
        && a.precip_type == b.precip_type
        && a.temp_high.div_euclid(10) == b.temp_high.div_euclid(10)
        && precip_bucket(a.precip_chance) == precip_bucket(b.precip_chance)
}

fn colloquial(value: &str) -> MrNode {
    MrNode::nested("date_time", vec![MrNode::arg("colloquial", value)])
}

fn day_node<R: Rng>(d: NaiveDate, reference: NaiveDate, rng: &mut R) -> MrNode {
    match (d - reference).num_days() {
        0 => colloquial("today"),
        1 => colloquial("tomorrow"),
        _ => {
            let mut subs = vec![MrNode::arg("weekday", weekday_of(d))];
            if rng.random_bool(0.3) {
                subs.push(MrNode::arg("month", month_name(d)));
                subs.push(MrNode::arg("day", &d.day().to_string()));
            }
            MrNode::nested("date_time", subs)
        }
    }
}

fn part_of_day(date: NaiveDate, hour: u32, reference: NaiveDate) -> String {
    let today = date == reference;
    let part = match hour {
        5..=11 => "morning",
        12..=16 => "afternoon",
        17..=20 => "evening",
        _ => "night",
    };
    match (today, part) {
        (true, "night") => "tonight".into(),
        (true, p) => format!("this {p}"),
        (false, p) => format!("tomorrow {p}"),
    }
}

fn condition_of(points: &[ForecastPoint]) -> String {
    if points.iter().any(|p| p.rare.is_some()) {
        return "fog".into();
    }
    let cloud = points.iter().map(|p| p.cloud_coverage).sum::<f64>() / points.len() as f64;
    match cloud {
        c if c < 25.0 => "sunny",
        c if c < 65.0 => "partly cloudy",
        _ => "cloudy",
    }
    .to_string()
}

fn period_of(points: &[ForecastPoint], date: MrNode, hourly: bool, sun: Option<SunTimes>) -> Period {
    let wettest = points.iter().max_by(|a, b| a.precip_chance.total_cmp(&b.precip_chance)).expect("period has points");
    let high = points.iter().map(|p| p.temp).fold(f64::MIN, f64::max);
    let low = points.iter().map(|p| p.temp_low).fold(f64::MAX, f64::min);
    let wind = points.iter().map(|p| p.wind_speed).fold(0.0, f64::max);
    Period {
        date,
        condition: condition_of(points),
        precip_type: wettest.precip_type.clone(),
        precip_chance: wettest.precip_chance as u32,
        temp_high: if hourly {
            (points.iter().map(|p| p.temp).sum::<f64>() / points.len() as f64).round() as i64
        } else {
            high as i64
        },
        temp_low: low as i64,
        hourly,
        wind: (wind >= WINDY).then_some(wind as i64),
        sun,
    }
}

pub fn summarize<R: Rng>(scenario: &QueryScenario, forecast: &Forecast, rng: &mut R) -> Vec<Period> {
    let reference = scenario.reference.date();
    match forecast.granularity {
        Granularity::Hourly => forecast
            .points
            .chunks(HOURS_PER_PERIOD)
            .map(|chunk| {
                let t = chunk[0].time;
                let date = colloquial(&part_of_day(t.date(), t.hour(), reference));
                period_of(chunk, date, true, None)
            })
            .collect(),
        Granularity::Daily => forecast
            .points
            .iter()
            .map(|p| {
                let d = p.time.date();
                let date = day_node(d, reference, rng);
                let sun = forecast.sun.iter().find(|s| s.date == d).cloned();
                period_of(std::slice::from_ref(p), date, false, sun)
            })
            .collect(),
    }
}

fn location_node(l: &Location, with_region: bool) -> MrNode {
    let mut subs = vec![MrNode::arg("city", &l.city)];
    if let (true, Some(r)) = (with_region, &l.region) {
        subs.push(MrNode::arg("region", r));
    }
    MrNode::nested("location", subs)
}

fn clock(t: NaiveTime) -> String {
    let (pm, h) = t.hour12();
    format!("{}:{:02}{}", h, t.minute(), if pm { "pm" } else { "am" })
}

fn inform<R: Rng>(p: &Period, location: Option<&MrNode>, single_day: bool, rng: &mut R) -> MrNode {
    let mut args = vec![p.date.clone()];
    if let Some(l) = location {
        args.push(l.clone());
    }
    args.push(MrNode::arg("condition", &p.condition));
    if p.hourly {
        args.push(MrNode::arg("temp", &p.temp_high.to_string()));
    } else {
        args.push(MrNode::arg("temp_high", &p.temp_high.to_string()));
        args.push(MrNode::arg("temp_low", &p.temp_low.to_string()));
    }
    if let Some(t) = &p.precip_type {
        if rng.random_bool(0.5) {
            args.push(MrNode::arg("precip_chance", &p.precip_chance.to_string()));
        } else {
            args.push(MrNode::arg("precip_chance_summary", precip_bucket(p.precip_chance)));
        }
        args.push(MrNode::arg("precip_type", t));
    }
    if let Some(w) = p.wind {
        args.push(MrNode::arg("wind_speed", &w.to_string()));
    }
    if let (true, Some(sun)) = (single_day, &p.sun) {
        match rng.random_range(0..10) {
            0 => args.push(MrNode::arg("sunrise_time", &clock(sun.sunrise))),
            1 => args.push(MrNode::arg("sunset_time", &clock(sun.sunset))),
            _ => {}
        }
    }
    MrNode::act("INFORM", args)
}

/// Condition-like values anywhere under `n`.
fn values(n: &MrNode, out: &mut Vec<String>) {
    if matches!(n.label.as_str(), "condition" | "precip_type") {
        if let Some(v) = &n.value {
            out.push(v.clone());
        }
    }
    for c in &n.children {
        values(c, out);
    }
}

fn opposed(a: &MrNode, b: &MrNode, config: &WeatherConfig) -> bool {
    let (mut va, mut vb) = (Vec::new(), Vec::new());
    values(a, &mut va);
    values(b, &mut vb);
    va.iter().any(|x| vb.iter().any(|y| config.oppositions.opposes(x, y)))
}

fn one(mut nodes: Vec<MrNode>) -> MrNode {
    if nodes.len() == 1 {
        nodes.pop().expect("one node")
    } else {
        MrNode::relation(JOIN, nodes)
    }
}

/// The date of the whole request, as the user asked for it.
fn request_date(s: &QueryScenario, periods: &[Period]) -> MrNode {
    if s.days == 1 {
        return match s.days_ahead() {
            0 => colloquial("today"),
            1 => colloquial("tomorrow"),
            _ => periods.first().map(|p| p.date.clone()).unwrap_or_else(|| {
                MrNode::nested("date_time", vec![MrNode::arg("weekday", weekday_of(s.start.date()))])
            }),
        };
    }
    let first = s.start.date();
    let last = first + Duration::days(s.days as i64 - 1);
    if s.days == 2 && first.weekday() == Weekday::Sat {
        return MrNode::nested("date_time_range", vec![MrNode::arg("colloquial", "this weekend")]);
    }
    MrNode::nested(
        "date_time_range",
        vec![MrNode::arg("start_weekday", weekday_of(first)), MrNode::arg("end_weekday", weekday_of(last))],
    )
}

fn recommendation(q: &Question, periods: &[Period]) -> Option<(String, String, bool)> {
    let any = |f: &dyn Fn(&Period) -> bool| periods.iter().any(f);
    let wet = any(&|p| p.precip_type.as_deref() == Some("rain"));
    let snowy = any(&|p| p.precip_type.as_deref() == Some("snow"));
    let sunny = any(&|p| p.condition == "sunny");
    let cold = periods.iter().map(|p| p.temp_low).min().unwrap_or(60) < 55;
    match q {
        Question::Attire(a) => {
            let good = match a.as_str() {
                "umbrella" | "raincoat" => wet,
                "boots" => snowy,
                "sunglasses" | "sunscreen" => sunny,
                _ => cold,
            };
            Some(("attire".into(), a.clone(), good))
        }
        Question::Activity(a) => {
            let warm = periods.iter().map(|p| p.temp_high).min().unwrap_or(0) >= 55;
            let good = !wet && !snowy && warm && !any(&|p| p.condition == "fog");
            Some(("activity".into(), a.clone(), good))
        }
        _ => None,
    }
}

/// Applies, in order: errors, aggregation of similar dates, contrast of
/// opposing acts, yes/no answers and recommendation justifications.
pub fn build_mr<R: Rng>(scenario: &QueryScenario, forecast: &Forecast, config: &WeatherConfig, rng: &mut R) -> MrTree {
    let loc = location_node(&scenario.location, rng.random_bool(0.3));

    if scenario.unknown_location {
        let err = MrNode::act("ERROR", vec![MrNode::arg("error_reason", "unknown location"), loc]);
        let mut top = vec![err];
        if rng.random_bool(0.5) {
            let here = &forecast.points[0];
            top.push(MrNode::act(
                "INFORM",
                vec![
                    colloquial("right now"),
                    location_node(&scenario.home, false),
                    MrNode::arg("condition", &condition_of(std::slice::from_ref(here))),
                    MrNode::arg("temp", &(here.temp as i64).to_string()),
                ],
            ));
        }
        return MrTree::from_top_level(top).expect("non-empty");
    }

    let periods = summarize(scenario, forecast, rng);
    if scenario.out_of_range(config) {
        let err =
            MrNode::act("ERROR", vec![MrNode::arg("error_reason", "too far ahead"), request_date(scenario, &periods)]);
        return MrTree::new(err);
    }

    // aggregation: runs of similar dates become joined INFORMs
    let mut groups: Vec<MrNode> = Vec::new();
    let mut i = 0;
    while i < periods.len() {
        let mut j = i + 1;
        while j < periods.len() && similar_periods(&periods[i], &periods[j]) {
            j += 1;
        }
        let informs = (i..j)
            .map(|k| {
                let with_loc = k == 0 || rng.random_bool(0.35);
                inform(&periods[k], with_loc.then_some(&loc), periods.len() == 1, rng)
            })
            .collect();
        groups.push(one(informs));
        i = j;
    }

    // contrast adjacent groups with opposing values
    let mut body: Vec<MrNode> = Vec::new();
    let mut it = groups.into_iter().peekable();
    while let Some(g) = it.next() {
        match it.peek() {
            Some(next) if opposed(&g, next, config) => {
                let next = it.next().expect("peeked");
                body.push(MrNode::relation("CONTRAST", vec![g, next]));
            }
            _ => body.push(g),
        }
    }

    let top = match &scenario.question {
        Question::General => body,
        Question::Boolean(q) => {
            let found = periods.iter().any(|p| &p.condition == q || p.precip_type.as_ref() == Some(q));
            let date = request_date(scenario, &periods);
            let answer = MrNode::act(if found { "YES" } else { "NO" }, vec![MrNode::arg("condition", q), date]);
            let denial = MrNode::act("INFORM", vec![loc.clone(), MrNode::arg("condition_not", q)]);
            let contrasting = !found && opposed(&MrNode::arg("condition", q), &one(body.clone()), config);
            if contrasting {
                vec![answer, MrNode::relation("CONTRAST", vec![denial, one(body)])]
            } else {
                let mut v = vec![answer];
                v.extend(body);
                v
            }
        }
        q @ (Question::Attire(_) | Question::Activity(_)) => {
            let (label, value, good) = recommendation(q, &periods).expect("attire or activity");
            let arg_label = if good { label } else { format!("{label}_not") };
            let rec = MrNode::act("RECOMMEND", vec![MrNode::arg(&arg_label, &value), request_date(scenario, &periods)]);
            vec![MrNode::relation("JUSTIFY", vec![rec, one(body)])]
        }
    };
    MrTree::from_top_level(top).expect("non-empty")
}
