//! Deterministic generator for the bundled fixture bundle: a synthetic
//! 1,000-record corpus (with exactly 21 unresolvable geos), a schematic
//! 50-state polygon grid with real primary time zones, census/land/
//! point-in-time tables (real California and Massachusetts values for
//! 2018-2019, smooth synthetic series elsewhere), a scored lexicon, a
//! stopword list, account labels covering the corpus' top accounts, and a
//! ready-to-run report config.
//!
//! Regenerating with the same seed reproduces every file byte for byte.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::Parser;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use signalpanel_core::ingest::{
    ingest_stream, ScopeFilter, StatePolygonSet, STATE_CODES,
};

#[derive(Parser)]
#[command(name = "genfixture", about = "Regenerate the bundled fixture bundle.")]
struct Cli {
    #[arg(long, default_value = "fixtures")]
    out_dir: PathBuf,
    #[arg(long, default_value_t = 42)]
    seed: u64,
}

/// 2010 census populations, thousands.
const POP_2010_K: [(u32, &str); 50] = [
    (710, "AK"), (4780, "AL"), (2916, "AR"), (6392, "AZ"), (37254, "CA"),
    (5029, "CO"), (3574, "CT"), (898, "DE"), (18801, "FL"), (9688, "GA"),
    (1360, "HI"), (3046, "IA"), (1568, "ID"), (12831, "IL"), (6484, "IN"),
    (2853, "KS"), (4339, "KY"), (4533, "LA"), (6548, "MA"), (5774, "MD"),
    (1328, "ME"), (9884, "MI"), (5304, "MN"), (5989, "MO"), (2967, "MS"),
    (989, "MT"), (9535, "NC"), (673, "ND"), (1826, "NE"), (1316, "NH"),
    (8792, "NJ"), (2059, "NM"), (2701, "NV"), (19378, "NY"), (11537, "OH"),
    (3751, "OK"), (3831, "OR"), (12702, "PA"), (1053, "RI"), (4625, "SC"),
    (814, "SD"), (6346, "TN"), (25146, "TX"), (2764, "UT"), (8001, "VA"),
    (626, "VT"), (6725, "WA"), (5687, "WI"), (1853, "WV"), (564, "WY"),
];

/// Land areas in square miles; California and Massachusetts carry the
/// published two-decimal values, the rest are rounded.
const LAND_SQ_MI: [(f64, &str); 50] = [
    (570641.0, "AK"), (50645.0, "AL"), (52035.0, "AR"), (113594.0, "AZ"),
    (155779.22, "CA"), (103642.0, "CO"), (4842.0, "CT"), (1949.0, "DE"),
    (53625.0, "FL"), (57513.0, "GA"), (6423.0, "HI"), (55857.0, "IA"),
    (82643.0, "ID"), (55519.0, "IL"), (35826.0, "IN"), (81759.0, "KS"),
    (39486.0, "KY"), (43204.0, "LA"), (7800.06, "MA"), (9707.0, "MD"),
    (30843.0, "ME"), (56539.0, "MI"), (79627.0, "MN"), (68742.0, "MO"),
    (46923.0, "MS"), (145546.0, "MT"), (48618.0, "NC"), (69001.0, "ND"),
    (76824.0, "NE"), (8953.0, "NH"), (7354.0, "NJ"), (121298.0, "NM"),
    (109781.0, "NV"), (47126.0, "NY"), (40861.0, "OH"), (68595.0, "OK"),
    (95988.0, "OR"), (44743.0, "PA"), (1034.0, "RI"), (30061.0, "SC"),
    (75811.0, "SD"), (41235.0, "TN"), (261232.0, "TX"), (82170.0, "UT"),
    (39490.0, "VA"), (9217.0, "VT"), (66456.0, "WA"), (54158.0, "WI"),
    (24038.0, "WV"), (97093.0, "WY"),
];

fn primary_tz(code: &str) -> &'static str {
    match code {
        "AK" => "America/Anchorage",
        "HI" => "Pacific/Honolulu",
        "AZ" => "America/Phoenix",
        "CA" | "NV" | "OR" | "WA" => "America/Los_Angeles",
        "CO" | "ID" | "MT" | "NM" | "UT" | "WY" => "America/Denver",
        "AL" | "AR" | "IA" | "IL" | "KS" | "LA" | "MN" | "MO" | "MS" | "ND" | "NE" | "OK"
        | "SD" | "TN" | "TX" | "WI" => "America/Chicago",
        "MI" => "America/Detroit",
        "IN" => "America/Indiana/Indianapolis",
        _ => "America/New_York",
    }
}

/// Per-capita homelessness rates. High-rate coastal states and a clearly
/// dominant Massachusetts density keep the fixture's rank structure stable.
fn homeless_rate(code: &str) -> f64 {
    match code {
        "CA" => 0.0033,
        "NY" => 0.0046,
        "HI" => 0.0045,
        "OR" => 0.0036,
        "WA" => 0.0031,
        "NV" => 0.0034,
        "MA" => 0.0031,
        "AK" => 0.0019,
        "VT" => 0.0017,
        "FL" => 0.0016,
        "CO" => 0.0018,
        "RI" | "NJ" | "DE" => 0.0011,
        "CT" | "MD" => 0.0013,
        "MS" | "KS" => 0.0005,
        "IL" | "MN" | "MO" | "VA" | "NH" | "ME" => 0.0009,
        _ => 0.0007,
    }
}

fn national_trend(year: i32) -> f64 {
    match year {
        2010 => 1.00,
        2011 => 0.98,
        2012 => 0.96,
        2013 => 0.94,
        2014 => 0.92,
        2015 => 0.90,
        2016 => 0.89,
        2017 => 0.90,
        2018 => 0.93,
        2019 => 0.97,
        2022 => 1.05,
        _ => 1.0,
    }
}

const PIT_YEARS: [i32; 11] = [2010, 2011, 2012, 2013, 2014, 2015, 2016, 2017, 2018, 2019, 2022];

fn population(code: &str, year: i32) -> u64 {
    match (code, year) {
        ("CA", 2018) => 39_557_045,
        ("CA", 2019) => 39_512_223,
        ("MA", 2018) => 6_882_635,
        ("MA", 2019) => 6_892_503,
        _ => {
            let idx = STATE_CODES.iter().position(|c| *c == code).unwrap();
            let base = POP_2010_K[idx].0 as f64 * 1000.0;
            let growth = 0.001 + 0.0008 * (idx % 12) as f64;
            (base * (1.0 + growth).powi(year - 2010)).round() as u64
        }
    }
}

fn homeless_count(code: &str, year: i32) -> u64 {
    match (code, year) {
        ("CA", 2018) => 129_972,
        ("CA", 2019) => 151_278,
        ("MA", 2018) => 20_068,
        ("MA", 2019) => 18_471,
        _ => {
            let idx = STATE_CODES.iter().position(|c| *c == code).unwrap();
            // Deterministic per-state-year jitter of +/-3%.
            let jitter = 1.0 + 0.03 * (((idx as i32 * 31 + year * 17) % 7 - 3) as f64 / 3.0);
            let expected =
                population(code, year) as f64 * homeless_rate(code) * national_trend(year) * jitter;
            expected.round().max(1.0) as u64
        }
    }
}

fn write_polygons(path: &Path) {
    let mut features = Vec::new();
    for (i, code) in STATE_CODES.iter().enumerate() {
        let col = (i % 10) as f64;
        let row = (i / 10) as f64;
        let lon0 = -125.0 + col * 6.0;
        let lat0 = 25.0 + row * 5.0;
        let (lon1, lat1) = (lon0 + 6.0, lat0 + 5.0);
        features.push(format!(
            r#"    {{"type":"Feature","properties":{{"usps":"{code}","tz":"{tz}"}},"geometry":{{"type":"Polygon","coordinates":[[[{lon0},{lat0}],[{lon1},{lat0}],[{lon1},{lat1}],[{lon0},{lat1}],[{lon0},{lat0}]]]}}}}"#,
            tz = primary_tz(code)
        ));
    }
    let body = format!(
        "{{\"type\":\"FeatureCollection\",\"features\":[\n{}\n]}}\n",
        features.join(",\n")
    );
    std::fs::write(path, body).unwrap();
}

/// Grid cell center matching the polygon layout above.
fn cell_center(code: &str) -> (f64, f64) {
    let i = STATE_CODES.iter().position(|c| *c == code).unwrap();
    let col = (i % 10) as f64;
    let row = (i / 10) as f64;
    (-125.0 + col * 6.0 + 3.0, 25.0 + row * 5.0 + 2.5)
}

const STOPWORDS: &str = "\
a an the and but or nor so if because as until while then once \
about above across after against along amid among around at before behind \
below beneath beside besides between beyond by despite during except for \
from in inside into near of off on onto out outside over through throughout \
to toward towards under underneath up upon with within without \
i me my myself we our ours ourselves you your yours yourself yourselves he \
him his himself she her hers herself it its itself they them their theirs \
themselves what which who whom whose whoever whomever this that these those \
anybody anyone anything everybody everyone everything nobody somebody \
someone something \
am is are was were be been being have has had having do does did doing can \
cannot will shall may might must \
no not only own same such too very just now here there when where why how \
all any both each few more most other some again further also ever never yet \
either neither whether every none unto amongst whilst per \
herein thereby wherein whereby hereof thereof";

fn write_stopwords(path: &Path) {
    let mut body = String::new();
    for word in STOPWORDS.split_whitespace() {
        body.push_str(word);
        body.push('\n');
    }
    std::fs::write(path, body).unwrap();
}

const LEXICON: [(&str, f64); 62] = [
    ("love", 8.42), ("happy", 8.30), ("great", 8.18), ("joy", 8.16),
    ("friend", 7.92), ("good", 7.89), ("smile", 7.89), ("family", 7.86),
    ("thank", 7.72), ("home", 7.69), ("free", 7.56), ("hope", 7.42),
    ("kind", 7.22), ("help", 7.18), ("community", 7.06), ("warm", 7.04),
    ("safe", 7.04), ("volunteer", 7.00), ("give", 7.00), ("meal", 6.92),
    ("donate", 6.90), ("support", 6.88), ("housing", 6.26), ("veterans", 6.02),
    ("shelter", 5.88), ("work", 5.84), ("winter", 5.64),
    ("people", 5.50), ("city", 5.43), ("man", 5.42), ("state", 5.32),
    ("person", 5.30), ("year", 5.28), ("street", 5.22), ("county", 5.10),
    ("of", 5.00), ("the", 4.98), ("tent", 4.66), ("need", 4.54),
    ("cold", 3.52), ("hungry", 3.38), ("bad", 3.24), ("alone", 3.10),
    ("problem", 2.96), ("homeless", 2.88), ("broken", 2.86),
    ("homelessness", 2.80), ("lost", 2.76), ("crisis", 2.74), ("fear", 2.64),
    ("sick", 2.52), ("sad", 2.38), ("cry", 2.30), ("pain", 2.10),
    ("poverty", 1.98), ("hate", 1.96), ("war", 1.80), ("die", 1.74),
    ("death", 1.54), ("hunger", 2.62), ("evicted", 2.44), ("struggle", 3.04),
];

fn write_lexicon(path: &Path) {
    let mut body = String::new();
    for (word, score) in LEXICON {
        writeln!(body, "{word}\t{score:.2}").unwrap();
    }
    std::fs::write(path, body).unwrap();
}

fn write_census(path: &Path) {
    let mut body = String::from("state,year,population\n");
    for code in STATE_CODES {
        for year in 2010..=2022 {
            writeln!(body, "{code},{year},{}", population(code, year)).unwrap();
        }
    }
    std::fs::write(path, body).unwrap();
}

fn write_land(path: &Path) {
    let mut body = String::from("state,land_sq_miles\n");
    for (area, code) in LAND_SQ_MI {
        writeln!(body, "{code},{area}").unwrap();
    }
    std::fs::write(path, body).unwrap();
}

fn write_pit(path: &Path) {
    let mut body = String::from("state,year,overall_homeless\n");
    for code in STATE_CODES {
        for year in PIT_YEARS {
            writeln!(body, "{code},{year},{}", homeless_count(code, year)).unwrap();
        }
    }
    // Pandemic-era rows for two states; the panel drops them by default.
    writeln!(body, "CA,2020,161548").unwrap();
    writeln!(body, "CA,2021,161548").unwrap();
    writeln!(body, "NY,2020,91271").unwrap();
    writeln!(body, "NY,2021,91271").unwrap();
    std::fs::write(path, body).unwrap();

    // The fixture's rank structure: Massachusetts leads homelessness
    // density in every year.
    for year in PIT_YEARS {
        let ma_density = homeless_count("MA", year) as f64 / 7800.06;
        for code in STATE_CODES {
            if code == "MA" {
                continue;
            }
            let idx = STATE_CODES.iter().position(|c| *c == code).unwrap();
            let density = homeless_count(code, year) as f64 / LAND_SQ_MI[idx].0;
            assert!(
                density < ma_density,
                "{code} density {density} >= MA {ma_density} in {year}"
            );
        }
    }
}

const POSITIVE: [&str; 20] = [
    "help", "hope", "love", "home", "thank", "support", "donate", "give", "kind", "warm",
    "good", "great", "happy", "community", "family", "friend", "meal", "volunteer", "housing",
    "veterans",
];
const NEGATIVE: [&str; 15] = [
    "crisis", "sad", "cold", "hungry", "poverty", "problem", "fear", "alone", "broken", "lost",
    "sick", "pain", "bad", "struggle", "evicted",
];
const FILLER: [&str; 16] = [
    "downtown", "tonight", "vets", "youth", "encampment", "county", "story", "tent", "winter",
    "night", "bus", "park", "train", "subway", "street", "city",
];
const HASHTAGS: [&str; 7] = [
    "#HomelessnessFirst",
    "#EndHomelessnessNow",
    "#Homelessnessfirst",
    "#ABCShelter",
    "#HousingFirst",
    "#homeless",
    "#HelpTheHomeless",
];
const CITIES: [&str; 10] = [
    "Springfield", "Riverton", "Fairview", "Franklin", "Greenville", "Bristol", "Clinton",
    "Georgetown", "Salem", "Madison",
];
const AMBIGUOUS: [&str; 6] = [
    "Starbucks",
    "Downtown",
    "City Park",
    "Main Street Cafe",
    "The Shelter",
    "Union Station",
];
const EMOJI: [&str; 5] = ["\u{1F62D}", "\u{1F622}", "\u{2764}\u{FE0F}", "\u{1F64F}", "\u{1F3E0}"];

fn sample_year(rng: &mut ChaCha8Rng) -> i32 {
    // Volume grows through the years, mirroring the slow rollout of
    // geotagging early in the window.
    let weights: [u32; 13] = [2, 3, 4, 5, 6, 7, 8, 9, 10, 10, 10, 10, 11];
    let total: u32 = weights.iter().sum();
    let mut pick = rng.gen_range(0..total);
    for (i, w) in weights.iter().enumerate() {
        if pick < *w {
            return 2010 + i as i32;
        }
        pick -= w;
    }
    2022
}

fn sample_state(rng: &mut ChaCha8Rng) -> &'static str {
    let total: u32 = POP_2010_K.iter().map(|(p, _)| p).sum();
    let mut pick = rng.gen_range(0..total);
    for (pop, code) in POP_2010_K {
        if pick < pop {
            return code;
        }
        pick -= pop;
    }
    "WY"
}

fn make_text(rng: &mut ChaCha8Rng, year: i32) -> String {
    let mut words: Vec<String> = Vec::new();
    if rng.gen_bool(0.5) {
        words.push("the".into());
    }
    if rng.gen_bool(0.3) {
        words.push("homelessness".into());
    }
    words.push("homeless".into());
    let p_pos = (0.35 + 0.03 * (year - 2010) as f64).min(0.75);
    let n_words = rng.gen_range(4..=10);
    for _ in 0..n_words {
        let roll: f64 = rng.gen();
        let word = if roll < p_pos {
            POSITIVE[rng.gen_range(0..POSITIVE.len())]
        } else if roll < p_pos + 0.30 {
            NEGATIVE[rng.gen_range(0..NEGATIVE.len())]
        } else {
            FILLER[rng.gen_range(0..FILLER.len())]
        };
        words.push(word.into());
    }
    if rng.gen_bool(0.12) {
        words.push("man's".into());
    }
    if rng.gen_bool(0.15) {
        let tag = HASHTAGS[rng.gen_range(0..HASHTAGS.len())];
        words.push(tag.into());
    }
    if rng.gen_bool(0.2) {
        words.push(format!("@user{}", rng.gen_range(1..400)));
    }
    if rng.gen_bool(0.15) {
        words.push(format!("https://t.co/{:06x}", rng.gen_range(0..0xFFFFFFu32)));
    }
    if rng.gen_bool(0.2) {
        words.push(EMOJI[rng.gen_range(0..EMOJI.len())].into());
    }
    let mut text = words.join(" ");
    if rng.gen_bool(0.4) {
        text.push('!');
    }
    text
}

fn write_tweets(path: &Path, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Zipf-ish author weights over 300 accounts.
    let author_weights: Vec<f64> = (0..300).map(|i| 1.0 / (i as f64 + 1.0).powf(0.9)).collect();
    let weight_total: f64 = author_weights.iter().sum();

    let mut lines = Vec::with_capacity(1000);
    for i in 0..1000usize {
        let year = sample_year(&mut rng);
        let month = if year == 2010 {
            rng.gen_range(3..=12)
        } else {
            rng.gen_range(1..=12)
        };
        let day = rng.gen_range(2..=27);
        let (hour, minute, second) = (
            rng.gen_range(0..24),
            rng.gen_range(0..60),
            rng.gen_range(0..60),
        );
        let created_at =
            format!("{year:04}-{month:02}-{day:02}T{hour:02}:{minute:02}:{second:02}Z");

        let mut pick = rng.gen::<f64>() * weight_total;
        let mut author_idx = 0;
        for (idx, w) in author_weights.iter().enumerate() {
            if pick < *w {
                author_idx = idx;
                break;
            }
            pick -= w;
        }
        let author_id = format!("9{author_idx:05}");
        let username = format!("user{author_idx:03}");

        // Exactly 21 positions are constructed unresolvable.
        let unresolvable = i % 48 == 5;
        let geo = if unresolvable {
            let territory = ["PR", "GU", "VI"][(i / 144) % 3];
            match (i / 48) % 3 {
                0 => serde_json::json!({
                    "country": territory,
                    "full_name": "San Juan, PR",
                    "place_type": "city",
                }),
                1 => serde_json::json!({
                    "country": "US",
                    "full_name": "Washington, DC",
                    "bbox": [-70.3, 19.9, -70.1, 20.1],
                    "place_type": "city",
                }),
                _ => serde_json::json!({
                    "country": "US",
                    "full_name": "Starbucks",
                    "place_type": "poi",
                }),
            }
        } else {
            let state = sample_state(&mut rng);
            if rng.gen_bool(0.6) {
                let city = CITIES[rng.gen_range(0..CITIES.len())];
                serde_json::json!({
                    "country": "US",
                    "full_name": format!("{city}, {state}"),
                    "place_type": "city",
                })
            } else {
                let (lon, lat) = cell_center(state);
                let dx: f64 = rng.gen_range(-2.0..2.0);
                let dy: f64 = rng.gen_range(-1.5..1.5);
                let half: f64 = rng.gen_range(0.01..0.2);
                let name = AMBIGUOUS[rng.gen_range(0..AMBIGUOUS.len())];
                serde_json::json!({
                    "country": "US",
                    "full_name": name,
                    "bbox": [lon + dx - half, lat + dy - half, lon + dx + half, lat + dy + half],
                    "place_type": "poi",
                })
            }
        };

        let text = if i % 167 == 11 {
            String::new()
        } else {
            make_text(&mut rng, year)
        };
        let mut author = serde_json::json!({ "username": username });
        if rng.gen_bool(0.3) {
            author["description"] = serde_json::json!("cares about housing");
        }
        let record = serde_json::json!({
            "id": format!("{}", 1_000_000 + i),
            "text": text,
            "created_at": created_at,
            "author_id": author_id,
            "author": author,
            "geo": geo,
        });
        lines.push(record.to_string());
    }
    std::fs::write(path, lines.join("\n") + "\n").unwrap();
}

/// Labels the corpus' top accounts. The ingest pass mirrors the default
/// report scope so the covered set is a superset of any top-20 slice.
fn write_labels(out_dir: &Path) {
    let polygons =
        StatePolygonSet::load(&out_dir.join("state_polygons.geojson")).expect("polygons");
    let lines = std::fs::read_to_string(out_dir.join("tweets.jsonl")).expect("tweets");
    let (records, stats) = ingest_stream(lines.lines(), &polygons, &ScopeFilter::default());
    assert_eq!(stats.total_lines, 1000);
    assert_eq!(stats.parsed, 1000);
    assert_eq!(stats.unresolved, 21, "fixture must have exactly 21 unresolvable geos");

    let frequency = signalpanel_core::accounts::account_frequency(
        records.iter().map(|r| r.raw.author_id.as_str()),
    );
    let mut body = String::from("author_id,class,subtype\n");
    for (rank, (author_id, _)) in frequency.iter().take(30).enumerate() {
        let (class, subtype) = match rank % 10 {
            1 => ("Entity", ["News", "Agency", "Legal"][rank % 3]),
            4 => ("Entity", "News"),
            6 => ("Individual", "Politician"),
            8 => ("Individual", "Journalist"),
            _ => ("Individual", ""),
        };
        writeln!(body, "{author_id},{class},{subtype}").unwrap();
    }
    std::fs::write(out_dir.join("account_labels.csv"), body).unwrap();
}

fn write_config(out_dir: &Path) {
    let body = "\
# Inputs for `signalpanel report`, relative to the repository root.
tweets=fixtures/tweets.jsonl
polygons=fixtures/state_polygons.geojson
lexicon=fixtures/lexicon.tsv
stopwords=fixtures/stopwords.txt
census=fixtures/census.csv
land=fixtures/land_area.csv
pit=fixtures/pit.csv
labels=fixtures/account_labels.csv
seed=42
n_boot=500
";
    std::fs::write(out_dir.join("report.conf"), body).unwrap();
}

fn main() {
    let cli = Cli::parse();
    std::fs::create_dir_all(&cli.out_dir).unwrap();
    write_polygons(&cli.out_dir.join("state_polygons.geojson"));
    write_stopwords(&cli.out_dir.join("stopwords.txt"));
    write_lexicon(&cli.out_dir.join("lexicon.tsv"));
    write_census(&cli.out_dir.join("census.csv"));
    write_land(&cli.out_dir.join("land_area.csv"));
    write_pit(&cli.out_dir.join("pit.csv"));
    write_tweets(&cli.out_dir.join("tweets.jsonl"), cli.seed);
    write_labels(&cli.out_dir);
    write_config(&cli.out_dir);
    println!("fixtures written to {}", cli.out_dir.display());
}
