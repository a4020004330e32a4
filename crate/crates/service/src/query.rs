//! Parsing of `?grades=2,7&scores=0,6&student=u7&min_count=3&top_errors=4`.

use std::collections::BTreeSet;
use std::str::FromStr;

use qlens_core::analytics::GroupFilter;
use qlens_core::views::GroupQuery;

use crate::ServiceError;

fn invalid(msg: impl Into<String>) -> ServiceError {
    ServiceError::InvalidQuery(msg.into())
}

fn number<T: FromStr>(key: &str, text: &str) -> Result<T, ServiceError> {
    text.trim()
        .parse()
        .map_err(|_| invalid(format!("`{key}` expects a non-negative integer, got `{text}`")))
}

fn set<T: FromStr + Ord>(key: &str, text: &str) -> Result<BTreeSet<T>, ServiceError> {
    text.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| number(key, s))
        .collect()
}

/// Builds a query from URL parameters. Unknown keys are rejected.
pub fn parse_group_query<'a>(pairs: impl IntoIterator<Item = (&'a str, &'a str)>) -> Result<GroupQuery, ServiceError> {
    let mut query = GroupQuery::default();
    let mut filter = GroupFilter::default();
    for (key, value) in pairs {
        match key {
            "grades" => {
                let grades: BTreeSet<u8> = set(key, value)?;
                if let Some(g) = grades.iter().find(|g| !(1..=12).contains(*g)) {
                    return Err(invalid(format!("grade {g} outside 1..=12")));
                }
                filter.grades = Some(grades);
            }
            "scores" => filter.scores = Some(set(key, value)?),
            "student" if !value.is_empty() => filter.student = Some(value.to_string()),
            "student" => {}
            "min_count" => query.min_count = number(key, value)?,
            "top_errors" => query.top_errors = number(key, value)?,
            other => return Err(invalid(format!("unknown parameter `{other}`"))),
        }
    }
    query.filter = filter;
    Ok(query)
}
