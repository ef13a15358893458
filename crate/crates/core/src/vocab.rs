//! Canonical vocabularies and mapping tables for the embedded career schema.
//!
//! These tables are the single source for `docs/data_dictionary.md`; change
//! both together.

pub const UNKNOWN: &str = "unknown";

/// Canonical headcount ranges, indexed by bucket (1..=7).
pub const SIZE_BUCKET_LABELS: [&str; 8] = [
    "",
    "1-10",
    "11-50",
    "51-200",
    "201-500",
    "501-1000",
    "1001-5000",
    "5001+",
];

/// Bucket at or above which a company counts as large (1,000+ people).
pub const LARGE_COMPANY_BUCKET: u8 = 6;

/// Maps a headcount to its size bucket (1..=7); 0 for a zero count.
pub fn size_bucket_for_headcount(n: u64) -> u8 {
    match n {
        0 => 0,
        1..=10 => 1,
        11..=50 => 2,
        51..=200 => 3,
        201..=500 => 4,
        501..=1000 => 5,
        1001..=5000 => 6,
        _ => 7,
    }
}

/// Parses a size label such as `"1001-5000"`, `"10,001+"`, `"myself only"`
/// or a bare headcount. Ranges map by their lower bound.
pub fn size_bucket_from_label(raw: &str) -> Option<u8> {
    let s = normalize_token(raw);
    if s.is_empty() || s == UNKNOWN {
        return Some(0);
    }
    if matches!(s.as_str(), "myself only" | "self-employed" | "self employed" | "solo") {
        return Some(1);
    }
    let lower: String = s
        .trim_start_matches(|c: char| !c.is_ascii_digit())
        .chars()
        .take_while(|c| c.is_ascii_digit() || *c == ',')
        .filter(|c| *c != ',')
        .collect();
    lower.parse::<u64>().ok().map(size_bucket_for_headcount)
}

/// Canonical seniority words, indexed by code (1..=6).
pub const SENIORITY_LABELS: [&str; 7] = ["", "intern", "ic", "senior", "director", "vp", "c-level"];

pub const C_LEVEL: u8 = 6;

const SENIORITY_EXACT: &[(&str, u8)] = &[
    ("intern", 1),
    ("internship", 1),
    ("junior", 1),
    ("trainee", 1),
    ("apprentice", 1),
    ("entry", 1),
    ("entry level", 1),
    ("ic", 2),
    ("individual contributor", 2),
    ("mid", 2),
    ("mid level", 2),
    ("associate", 2),
    ("engineer", 2),
    ("analyst", 2),
    ("senior", 3),
    ("senior ic", 3),
    ("lead", 3),
    ("staff", 3),
    ("principal", 3),
    ("manager", 4),
    ("director", 4),
    ("head", 4),
    ("vp", 5),
    ("svp", 5),
    ("evp", 5),
    ("vice president", 5),
    ("partner", 5),
    ("c-level", 6),
    ("c level", 6),
    ("c-suite", 6),
    ("executive", 6),
    ("chief", 6),
    ("ceo", 6),
    ("cto", 6),
    ("cfo", 6),
    ("coo", 6),
    ("cmo", 6),
    ("cpo", 6),
    ("president", 6),
];

// Checked in order against the words of a free-form title; the first hit wins.
const SENIORITY_KEYWORDS: &[(&str, u8)] = &[
    ("vice", 5),
    ("vp", 5),
    ("svp", 5),
    ("evp", 5),
    ("chief", 6),
    ("ceo", 6),
    ("cto", 6),
    ("cfo", 6),
    ("coo", 6),
    ("cmo", 6),
    ("cpo", 6),
    ("president", 6),
    ("director", 4),
    ("head", 4),
    ("manager", 4),
    ("senior", 3),
    ("sr", 3),
    ("lead", 3),
    ("staff", 3),
    ("principal", 3),
    ("intern", 1),
    ("junior", 1),
    ("jr", 1),
    ("trainee", 1),
    ("engineer", 2),
    ("developer", 2),
    ("analyst", 2),
    ("associate", 2),
    ("scientist", 2),
    ("consultant", 2),
    ("designer", 2),
];

/// Maps a seniority label or job title to its code (0 = unknown).
pub fn seniority_code(raw: &str) -> u8 {
    let s = normalize_token(raw);
    if let Some(&(_, code)) = SENIORITY_EXACT.iter().find(|(k, _)| *k == s) {
        return code;
    }
    let words: Vec<&str> = s
        .split(|c: char| !c.is_ascii_alphanumeric())
        .filter(|w| !w.is_empty())
        .collect();
    SENIORITY_KEYWORDS
        .iter()
        .find(|(k, _)| words.contains(k))
        .map_or(0, |&(_, code)| code)
}

/// Canonical prestige labels, indexed by tier (1..=4).
pub const PRESTIGE_LABELS: [&str; 5] = ["", "ranked", "top100", "top50", "top10"];

pub const TOP_PRESTIGE_TIER: u8 = 4;

pub fn prestige_tier_for_rank(rank: u64) -> u8 {
    match rank {
        0 => 0,
        1..=10 => 4,
        11..=50 => 3,
        51..=100 => 2,
        _ => 1,
    }
}

pub fn prestige_tier_from_label(raw: &str) -> Option<u8> {
    let s: String = normalize_token(raw)
        .chars()
        .filter(|c| !matches!(c, ' ' | '-' | '_'))
        .collect();
    match s.as_str() {
        "" | "unknown" | "unranked" | "none" => Some(0),
        "top10" | "elite" => Some(4),
        "top50" => Some(3),
        "top100" => Some(2),
        "ranked" | "top200" | "top500" | "other" => Some(1),
        _ => None,
    }
}

/// Canonical degree labels, indexed by level (1..=4).
pub const DEGREE_LABELS: [&str; 5] = ["", "associate", "bachelor", "master", "phd"];

pub fn degree_level(raw: &str) -> u8 {
    let s: String = normalize_token(raw)
        .chars()
        .filter(|c| !matches!(c, '.' | '\''))
        .collect();
    match s.as_str() {
        "associate" | "associates" | "aa" | "as" => 1,
        "bachelor" | "bachelors" | "ba" | "bs" | "bsc" | "beng" | "undergraduate" => 2,
        "master" | "masters" | "ms" | "msc" | "ma" | "meng" | "mba" | "mphil" => 3,
        "phd" | "doctorate" | "dphil" | "md" | "jd" | "doctoral" => 4,
        _ => 0,
    }
}

const INDUSTRY_ALIASES: &[(&str, &str)] = &[
    ("venture capital", "vc/pe"),
    ("private equity", "vc/pe"),
    ("venture capital & private equity", "vc/pe"),
    ("venture capital and private equity", "vc/pe"),
    ("vc", "vc/pe"),
    ("pe", "vc/pe"),
    ("vc pe", "vc/pe"),
    ("biotechnology", "biotech"),
    ("life sciences", "biotech"),
    ("pharmaceuticals", "biotech"),
    ("financial technology", "fintech"),
    ("financial services", "fintech"),
    ("banking", "fintech"),
    ("artificial intelligence", "ai"),
    ("machine learning", "ai"),
    ("computer software", "software"),
    ("saas", "software"),
    ("internet", "software"),
    ("e-commerce", "ecommerce"),
    ("retail", "ecommerce"),
    ("health care", "healthcare"),
    ("medical devices", "healthcare"),
    ("semiconductors", "hardware"),
    ("electronics", "hardware"),
    ("clean energy", "energy"),
    ("renewables", "energy"),
    ("management consulting", "consulting"),
    ("edtech", "education"),
];

pub const PENALIZED_INDUSTRIES: [&str; 2] = ["biotech", "vc/pe"];

/// Lowercases, trims and collapses internal whitespace/underscores.
pub fn normalize_token(raw: &str) -> String {
    raw.split(|c: char| c.is_whitespace() || c == '_')
        .filter(|w| !w.is_empty())
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase()
}

/// Normalizes an industry and applies the alias table. Empty input is `unknown`.
pub fn normalize_industry(raw: &str) -> String {
    let s = normalize_token(raw);
    if s.is_empty() || s == "null" || s == "none" {
        return UNKNOWN.to_owned();
    }
    INDUSTRY_ALIASES
        .iter()
        .find(|(k, _)| *k == s)
        .map_or(s, |(_, v)| (*v).to_owned())
}

const FIELD_ALIASES: &[(&str, &str)] = &[
    ("cs", "computer science"),
    ("comp sci", "computer science"),
    ("computing", "computer science"),
    ("software engineering", "computer science"),
    ("computer engineering", "computer science"),
    ("information technology", "computer science"),
    ("ee", "electrical engineering"),
    ("electronics engineering", "electrical engineering"),
    ("maths", "mathematics"),
    ("math", "mathematics"),
    ("applied mathematics", "mathematics"),
    ("stats", "statistics"),
    ("molecular biology", "biology"),
    ("biochemistry", "biology"),
    ("bioengineering", "biology"),
    ("biomedical engineering", "biology"),
    ("materials", "materials science"),
    ("materials engineering", "materials science"),
    ("business administration", "business"),
    ("management", "business"),
    ("mba", "business"),
    ("accounting", "finance"),
    ("econ", "economics"),
    ("mechanical", "mechanical engineering"),
    ("medical", "medicine"),
    ("pharmacy", "medicine"),
];

pub fn normalize_field(raw: &str) -> String {
    let s = normalize_token(raw);
    if s.is_empty() {
        return UNKNOWN.to_owned();
    }
    FIELD_ALIASES
        .iter()
        .find(|(k, _)| *k == s)
        .map_or(s, |(_, v)| (*v).to_owned())
}

const STEM_FIELDS: &[&str] = &[
    "computer science",
    "electrical engineering",
    "mechanical engineering",
    "chemical engineering",
    "civil engineering",
    "engineering",
    "mathematics",
    "statistics",
    "physics",
    "chemistry",
    "biology",
    "materials science",
    "data science",
    "medicine",
];

pub fn is_stem_field(field: &str) -> bool {
    STEM_FIELDS.contains(&field)
}

pub const RELEVANCE_EXACT: f64 = 1.0;
pub const RELEVANCE_RELATED: f64 = 0.5;

/// Field → (exactly relevant industries, related industries).
pub const RELEVANCE_TABLE: &[(&str, &[&str], &[&str])] = &[
    (
        "computer science",
        &["software", "ai"],
        &["fintech", "ecommerce", "hardware", "media", "education"],
    ),
    (
        "electrical engineering",
        &["hardware", "energy"],
        &["software", "ai", "healthcare"],
    ),
    (
        "mechanical engineering",
        &["hardware", "manufacturing"],
        &["energy", "healthcare"],
    ),
    ("chemical engineering", &["energy", "manufacturing"], &["biotech"]),
    ("mathematics", &["ai"], &["fintech", "software", "vc/pe"]),
    ("statistics", &["ai"], &["fintech", "software", "healthcare"]),
    ("physics", &["hardware"], &["energy", "ai"]),
    ("chemistry", &["biotech"], &["energy", "manufacturing"]),
    ("biology", &["biotech"], &["healthcare"]),
    ("medicine", &["healthcare", "biotech"], &[]),
    (
        "materials science",
        &["manufacturing"],
        &["hardware", "energy", "biotech"],
    ),
    ("data science", &["ai"], &["software", "fintech"]),
    ("finance", &["fintech", "vc/pe"], &["real estate"]),
    ("economics", &["fintech"], &["vc/pe", "consulting"]),
    (
        "business",
        &["consulting", "vc/pe"],
        &["ecommerce", "fintech", "real estate"],
    ),
    ("law", &["legal tech"], &["fintech", "real estate"]),
    ("design", &["media"], &["ecommerce", "software"]),
    ("education", &["education"], &[]),
];

/// Relevance of a degree field to a founding industry: 1.0, 0.5 or 0.0.
pub fn field_relevance(field: &str, industry: &str) -> f64 {
    match RELEVANCE_TABLE.iter().find(|(f, _, _)| *f == field) {
        Some((_, exact, _)) if exact.contains(&industry) => RELEVANCE_EXACT,
        Some((_, _, related)) if related.contains(&industry) => RELEVANCE_RELATED,
        _ => 0.0,
    }
}
