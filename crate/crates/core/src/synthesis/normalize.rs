//! Spoken-form text normalization for synthesis.
//!
//! Covers cardinals and ordinals up to 999,999,999, decimals, percentages,
//! clock times, numeric dates, currency, measurements and a fixed list of
//! abbreviations. Anything else passes through verbatim. Disfluency markers
//! and the truncation tag are removed; the fillers they introduced stay.

use std::sync::LazyLock;

use regex::{Captures, Regex};

use crate::corpus::{strip_markers, BARGEIN_TAG};

const ONES: [&str; 20] = [
    "zero", "one", "two", "three", "four", "five", "six", "seven", "eight", "nine", "ten", "eleven", "twelve",
    "thirteen", "fourteen", "fifteen", "sixteen", "seventeen", "eighteen", "nineteen",
];
const TENS: [&str; 10] = [
    "", "", "twenty", "thirty", "forty", "fifty", "sixty", "seventy", "eighty", "ninety",
];
const MONTHS: [&str; 12] = [
    "January", "February", "March", "April", "May", "June", "July", "August", "September", "October", "November",
    "December",
];

/// Largest value spelled as a cardinal; longer digit strings are read digit by digit.
pub const MAX_CARDINAL: u64 = 999_999_999;

fn below_thousand(n: u64, out: &mut Vec<String>) {
    let (h, r) = (n / 100, n % 100);
    if h > 0 {
        out.push(ONES[h as usize].into());
        out.push("hundred".into());
    }
    if r >= 20 {
        let t = TENS[(r / 10) as usize];
        if r % 10 == 0 {
            out.push(t.into());
        } else {
            out.push(t.into());
            out.push(ONES[(r % 10) as usize].into());
        }
    } else if r > 0 || h == 0 {
        out.push(ONES[r as usize].into());
    }
}

/// `123` → "one hundred twenty three". Panics above [`MAX_CARDINAL`].
pub fn cardinal(n: u64) -> String {
    assert!(n <= MAX_CARDINAL, "{n} exceeds the supported range");
    if n == 0 {
        return "zero".into();
    }
    let mut out = Vec::new();
    for (scale, name) in [(1_000_000, "million"), (1_000, "thousand")] {
        if !(n / scale).is_multiple_of(1000) {
            below_thousand(n / scale % 1000, &mut out);
            out.push(name.into());
        }
    }
    if !n.is_multiple_of(1000) {
        below_thousand(n % 1000, &mut out);
    }
    out.join(" ")
}

/// `21` → "twenty first".
pub fn ordinal(n: u64) -> String {
    let c = cardinal(n);
    let (head, last) = match c.rsplit_once(' ') {
        Some((h, l)) => (format!("{h} "), l.to_string()),
        None => (String::new(), c),
    };
    let last = match last.as_str() {
        "one" => "first".to_string(),
        "two" => "second".to_string(),
        "three" => "third".to_string(),
        "five" => "fifth".to_string(),
        "eight" => "eighth".to_string(),
        "nine" => "ninth".to_string(),
        "twelve" => "twelfth".to_string(),
        w if w.ends_with('y') => format!("{}ieth", &w[..w.len() - 1]),
        w => format!("{w}th"),
    };
    format!("{head}{last}")
}

pub fn digits(s: &str) -> String {
    s.chars()
        .filter_map(|c| c.to_digit(10))
        .map(|d| ONES[d as usize])
        .collect::<Vec<_>>()
        .join(" ")
}

/// Reads `2024` as "twenty twenty four", `1905` as "nineteen oh five".
pub fn year(n: u64) -> String {
    if (2000..2010).contains(&n) || !(1000..=9999).contains(&n) {
        return cardinal(n);
    }
    let (hi, lo) = (n / 100, n % 100);
    match lo {
        0 => format!("{} hundred", cardinal(hi)),
        1..=9 => format!("{} oh {}", cardinal(hi), cardinal(lo)),
        _ => format!("{} {}", cardinal(hi), cardinal(lo)),
    }
}

/// Integer string (commas allowed) in spoken form.
fn integer(s: &str) -> String {
    let plain: String = s.chars().filter(|c| *c != ',').collect();
    if plain.len() > 1 && plain.starts_with('0') {
        return digits(&plain);
    }
    match plain.parse::<u64>() {
        Ok(n) if n <= MAX_CARDINAL => cardinal(n),
        _ => digits(&plain),
    }
}

fn decimal(int: &str, frac: &str) -> String {
    format!("{} point {}", integer(int), digits(frac))
}

fn clock(h: u64, m: u64, suffix: Option<&str>) -> String {
    let hour = cardinal(h);
    let minutes = match m {
        0 => None,
        1..=9 => Some(format!("oh {}", cardinal(m))),
        _ => Some(cardinal(m)),
    };
    let suffix = suffix.map(|s| s.replace('.', "").to_lowercase());
    match (minutes, suffix) {
        (Some(mm), Some(s)) => format!("{hour} {mm} {s}"),
        (Some(mm), None) => format!("{hour} {mm}"),
        (None, Some(s)) => format!("{hour} {s}"),
        (None, None) => format!("{hour} o'clock"),
    }
}

const ABBREVIATIONS: &[(&str, &str)] = &[
    ("Dr.", "doctor"),
    ("Mr.", "mister"),
    ("Mrs.", "missus"),
    ("Ms.", "miz"),
    ("St.", "street"),
    ("Ave.", "avenue"),
    ("Rd.", "road"),
    ("Blvd.", "boulevard"),
    ("Apt.", "apartment"),
    ("approx.", "approximately"),
    ("etc.", "et cetera"),
    ("vs.", "versus"),
    ("no.", "number"),
    ("No.", "number"),
];

const UNITS: &[(&str, &str, &str)] = &[
    ("km", "kilometer", "kilometers"),
    ("kg", "kilogram", "kilograms"),
    ("cm", "centimeter", "centimeters"),
    ("mm", "millimeter", "millimeters"),
    ("ml", "milliliter", "milliliters"),
    ("mi", "mile", "miles"),
    ("lbs", "pound", "pounds"),
    ("lb", "pound", "pounds"),
    ("m", "meter", "meters"),
    ("g", "gram", "grams"),
    ("l", "liter", "liters"),
];

const CURRENCIES: &[(char, &str, &str, &str, &str)] = &[
    ('$', "dollar", "dollars", "cent", "cents"),
    ('£', "pound", "pounds", "penny", "pence"),
    ('€', "euro", "euros", "cent", "cents"),
];

static DATE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\b(\d{1,2})/(\d{1,2})/(\d{4})\b").unwrap());
static TIME: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"\b(\d{1,2}):(\d{2})(?:\s?([AaPp]\.?[Mm]\.?))?(?:\b|$)|\b(\d{1,2})\s?([AaPp]\.?[Mm]\.?)(?:\s|$|[,;!?])")
        .unwrap()
});
static MONEY: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"([$£€])(\d{1,3}(?:,\d{3})+|\d+)(?:\.(\d{2}))?\b").unwrap());
static MEASURE: LazyLock<Regex> = LazyLock::new(|| {
    let units: Vec<&str> = UNITS.iter().map(|u| u.0).collect();
    Regex::new(&format!(r"\b(\d+(?:\.\d+)?)\s?({})\b", units.join("|"))).unwrap()
});
static PERCENT: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\b(\d+)(?:\.(\d+))?%").unwrap());
static ORDINAL: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\b(\d+)(?:st|nd|rd|th)\b").unwrap());
static DECIMAL: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\b(\d+)\.(\d+)\b").unwrap());
static INTEGER: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\b\d{1,3}(?:,\d{3})+\b|\b\d+\b").unwrap());
static ABBREV: LazyLock<Regex> = LazyLock::new(|| {
    let alts: Vec<String> = ABBREVIATIONS.iter().map(|(a, _)| regex::escape(a)).collect();
    Regex::new(&format!(r"(?:^|\b)({})(?:\s|$)", alts.join("|"))).unwrap()
});
static SPACES: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"[ \t]{2,}").unwrap());

fn num(c: &Captures<'_>, i: usize) -> u64 {
    c[i].parse().expect("digits")
}

/// Text as it should be spoken.
pub fn normalize_text(s: &str) -> String {
    normalize_with(s, &[])
}

/// [`normalize_text`] followed by caller-supplied rewrite rules, in order.
pub fn normalize_with(s: &str, extra: &[fn(&str) -> String]) -> String {
    let s = strip_markers(&s.replace(BARGEIN_TAG, ""));

    let s = DATE.replace_all(&s, |c: &Captures<'_>| {
        let (m, d, y) = (num(c, 1), num(c, 2), num(c, 3));
        if (1..=12).contains(&m) && (1..=31).contains(&d) {
            format!("{} {} {}", MONTHS[m as usize - 1], ordinal(d), year(y))
        } else {
            c[0].to_string()
        }
    });
    let s = TIME.replace_all(&s, |c: &Captures<'_>| {
        let tail = if c[0].ends_with(|ch: char| ch.is_whitespace() || ",;!?".contains(ch)) {
            &c[0][c[0].len() - 1..]
        } else {
            ""
        };
        if let Some(h) = c.get(1) {
            // Out-of-range values are still read as hour and minute groups.
            let (h, m): (u64, u64) = (h.as_str().parse().unwrap(), num(c, 2));
            format!("{}{tail}", clock(h, m, c.get(3).map(|x| x.as_str())))
        } else {
            let h = num(c, 4);
            if !(1..=12).contains(&h) {
                return c[0].to_string();
            }
            format!("{}{tail}", clock(h, 0, Some(&c[5])))
        }
    });
    let s = MONEY.replace_all(&s, |c: &Captures<'_>| {
        let sym = c[1].chars().next().unwrap();
        let (_, one, many, sub_one, sub_many) = CURRENCIES.iter().find(|x| x.0 == sym).unwrap();
        let whole = integer(&c[2]);
        let unit = if whole == "one" { one } else { many };
        match c.get(3).map(|x| x.as_str().parse::<u64>().unwrap()) {
            Some(cents) if cents > 0 => {
                let sub = if cents == 1 { sub_one } else { sub_many };
                format!("{whole} {unit} and {} {sub}", cardinal(cents))
            }
            _ => format!("{whole} {unit}"),
        }
    });
    let s = MEASURE.replace_all(&s, |c: &Captures<'_>| {
        let (_, one, many) = UNITS.iter().find(|u| u.0 == &c[2]).unwrap();
        let amount = match c[1].split_once('.') {
            Some((i, f)) => decimal(i, f),
            None => integer(&c[1]),
        };
        format!("{amount} {}", if amount == "one" { one } else { many })
    });
    let s = PERCENT.replace_all(&s, |c: &Captures<'_>| match c.get(2) {
        Some(f) => format!("{} percent", decimal(&c[1], f.as_str())),
        None => format!("{} percent", integer(&c[1])),
    });
    let s = ORDINAL.replace_all(&s, |c: &Captures<'_>| match c[1].parse::<u64>() {
        Ok(n) if n <= MAX_CARDINAL => ordinal(n),
        _ => c[0].to_string(),
    });
    let s = DECIMAL.replace_all(&s, |c: &Captures<'_>| decimal(&c[1], &c[2]));
    let s = INTEGER.replace_all(&s, |c: &Captures<'_>| integer(&c[0]));
    let s = ABBREV.replace_all(&s, |c: &Captures<'_>| {
        let word = ABBREVIATIONS.iter().find(|(a, _)| *a == &c[1]).unwrap().1;
        let tail = &c[0][c[0].find(&c[1]).unwrap() + c[1].len()..];
        let head = &c[0][..c[0].find(&c[1]).unwrap()];
        format!("{head}{word}{tail}")
    });
    let mut s = SPACES.replace_all(s.trim(), " ").into_owned();
    for rule in extra {
        s = rule(&s);
    }
    s
}
