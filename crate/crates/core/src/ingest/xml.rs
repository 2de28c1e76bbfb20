//! Streaming parsers for `Posts.xml` and `Users.xml` dump files.
//!
//! Dump files are a single root element containing one `row` element per
//! record, with all data in attributes. Parsing is single-pass and keeps only
//! the current row in memory.

use std::collections::HashMap;
use std::io::BufRead;

use chrono::{DateTime, NaiveDateTime, Utc};
use quick_xml::events::attributes::Attribute;
use quick_xml::events::{BytesStart, Event};
use quick_xml::Reader;

use super::{IngestError, PostType, RawPost};

/// Parse a dump timestamp, e.g. `2013-09-01T12:00:00.000`.
///
/// Dump timestamps carry no zone marker and are UTC by convention; an
/// explicit offset is honoured when present.
pub fn parse_timestamp(s: &str) -> Option<DateTime<Utc>> {
    if let Ok(dt) = DateTime::parse_from_rfc3339(s) {
        return Some(dt.with_timezone(&Utc));
    }
    for fmt in ["%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%dT%H:%M:%S"] {
        if let Ok(naive) = NaiveDateTime::parse_from_str(s, fmt) {
            return Some(naive.and_utc());
        }
    }
    None
}

/// Lazy iterator over `Posts.xml` rows.
///
/// Yields one [`RawPost`] per `row` element. Row-level problems (bad
/// `CreationDate`, answer without `ParentId`) surface as
/// [`IngestError::Record`] items and iteration continues; malformed XML ends
/// the stream after one [`IngestError::Xml`].
pub struct PostsReader<R: BufRead> {
    reader: Reader<R>,
    buf: Vec<u8>,
    done: bool,
}

/// Stream-parse `Posts.xml` content.
pub fn parse_posts<R: BufRead>(input: R) -> PostsReader<R> {
    PostsReader {
        reader: Reader::from_reader(input),
        buf: Vec::new(),
        done: false,
    }
}

impl<R: BufRead> Iterator for PostsReader<R> {
    type Item = Result<RawPost, IngestError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        loop {
            self.buf.clear();
            match self.reader.read_event_into(&mut self.buf) {
                Ok(Event::Empty(e)) | Ok(Event::Start(e)) => {
                    if e.name().as_ref() == b"row" {
                        return Some(parse_post_row(&e));
                    }
                }
                Ok(Event::Eof) => {
                    self.done = true;
                    return None;
                }
                Ok(_) => {}
                Err(err) => {
                    self.done = true;
                    return Some(Err(IngestError::Xml {
                        offset: self.reader.buffer_position(),
                        message: err.to_string(),
                    }));
                }
            }
        }
    }
}

struct RowAttrs {
    values: HashMap<String, String>,
}

impl RowAttrs {
    fn read(e: &BytesStart<'_>) -> Result<Self, String> {
        let mut values = HashMap::new();
        for attr in e.attributes() {
            let attr: Attribute<'_> = attr.map_err(|e| e.to_string())?;
            let key = String::from_utf8_lossy(attr.key.as_ref()).into_owned();
            let value = attr.unescape_value().map_err(|e| e.to_string())?.into_owned();
            values.insert(key, value);
        }
        Ok(RowAttrs { values })
    }

    fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    fn parse_u64(&self, key: &str) -> Result<Option<u64>, String> {
        match self.get(key) {
            None => Ok(None),
            Some(raw) => raw
                .parse::<u64>()
                .map(Some)
                .map_err(|_| format!("attribute {key}={raw:?} is not a positive integer")),
        }
    }

    fn parse_i64(&self, key: &str) -> Result<Option<i64>, String> {
        match self.get(key) {
            None => Ok(None),
            Some(raw) => raw
                .parse::<i64>()
                .map(Some)
                .map_err(|_| format!("attribute {key}={raw:?} is not an integer")),
        }
    }
}

fn parse_post_row(e: &BytesStart<'_>) -> Result<RawPost, IngestError> {
    let attrs = RowAttrs::read(e).map_err(|message| IngestError::Record { row_id: 0, message })?;
    let row_id = attrs
        .parse_u64("Id")
        .ok()
        .flatten()
        .ok_or_else(|| IngestError::Record {
            row_id: 0,
            message: "missing or invalid Id attribute".into(),
        })?;
    let record_err = |message: String| IngestError::Record { row_id, message };

    let post_type = match attrs.get("PostTypeId") {
        Some("1") => PostType::Question,
        Some("2") => PostType::Answer,
        Some(_) => PostType::Other,
        None => return Err(record_err("missing PostTypeId attribute".into())),
    };
    let creation_raw = attrs
        .get("CreationDate")
        .ok_or_else(|| record_err("missing CreationDate attribute".into()))?;
    let creation_date = parse_timestamp(creation_raw)
        .ok_or_else(|| record_err(format!("unparseable CreationDate {creation_raw:?}")))?;
    let parent_id = attrs.parse_u64("ParentId").map_err(&record_err)?;
    if post_type == PostType::Answer && parent_id.is_none() {
        return Err(record_err("answer row has no ParentId".into()));
    }
    Ok(RawPost {
        id: row_id,
        post_type,
        parent_id,
        accepted_answer_id: attrs.parse_u64("AcceptedAnswerId").map_err(&record_err)?,
        creation_date,
        score: attrs.parse_i64("Score").map_err(&record_err)?.unwrap_or(0),
        body: attrs.get("Body").unwrap_or("").to_owned(),
        owner_user_id: attrs.parse_u64("OwnerUserId").map_err(&record_err)?,
        answer_count: attrs
            .parse_u64("AnswerCount")
            .map_err(&record_err)?
            .map(|n| n as u32),
    })
}

/// Parse `Users.xml` into a user-id → reputation map.
///
/// Rows without a parseable `Id` are skipped; missing or negative
/// `Reputation` clamps to zero; duplicate ids keep the last occurrence.
pub fn parse_users<R: BufRead>(input: R) -> Result<HashMap<u64, u64>, IngestError> {
    let mut reader = Reader::from_reader(input);
    let mut buf = Vec::new();
    let mut users = HashMap::new();
    loop {
        buf.clear();
        match reader.read_event_into(&mut buf) {
            Ok(Event::Empty(e)) | Ok(Event::Start(e)) => {
                if e.name().as_ref() != b"row" {
                    continue;
                }
                let Ok(attrs) = RowAttrs::read(&e) else {
                    continue;
                };
                let Ok(Some(id)) = attrs.parse_u64("Id") else {
                    continue;
                };
                let reputation = attrs
                    .parse_i64("Reputation")
                    .ok()
                    .flatten()
                    .unwrap_or(0)
                    .max(0) as u64;
                users.insert(id, reputation);
            }
            Ok(Event::Eof) => return Ok(users),
            Ok(_) => {}
            Err(err) => {
                return Err(IngestError::Xml {
                    offset: reader.buffer_position(),
                    message: err.to_string(),
                })
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const POSTS_FIXTURE: &str = r#"<?xml version="1.0" encoding="utf-8"?>
<posts>
  <row Id="1" PostTypeId="1" AcceptedAnswerId="4" CreationDate="2013-09-01T12:00:00.000" Score="5" Body="&lt;p&gt;How do I sort?&lt;/p&gt;" OwnerUserId="7" AnswerCount="2" />
  <row Id="3" PostTypeId="2" ParentId="1" CreationDate="2013-09-01T12:10:00.000" Score="1" Body="&lt;p&gt;Try bubble sort.&lt;/p&gt;" OwnerUserId="9" />
  <row Id="4" PostTypeId="2" ParentId="1" CreationDate="2013-09-01T12:20:00.000" Score="3" Body="&lt;p&gt;Use the standard library.&lt;/p&gt;" OwnerUserId="7" />
</posts>
"#;

    #[test]
    fn empty_root_yields_nothing() {
        let posts: Vec<_> = parse_posts("<posts></posts>".as_bytes()).collect();
        assert!(posts.is_empty());
    }

    #[test]
    fn fixture_rows_echo_attributes() {
        let posts: Result<Vec<_>, _> = parse_posts(POSTS_FIXTURE.as_bytes()).collect();
        let posts = posts.unwrap();
        assert_eq!(posts.len(), 3);

        let q = &posts[0];
        assert_eq!(q.id, 1);
        assert_eq!(q.post_type, PostType::Question);
        assert_eq!(q.accepted_answer_id, Some(4));
        assert_eq!(q.parent_id, None);
        assert_eq!(q.score, 5);
        assert_eq!(q.body, "<p>How do I sort?</p>");
        assert_eq!(q.owner_user_id, Some(7));
        assert_eq!(q.answer_count, Some(2));
        assert_eq!(q.creation_date, parse_timestamp("2013-09-01T12:00:00.000").unwrap());

        let a = &posts[1];
        assert_eq!(a.post_type, PostType::Answer);
        assert_eq!(a.parent_id, Some(1));
        assert_eq!(a.accepted_answer_id, None);
        assert_eq!(posts[2].score, 3);
    }

    #[test]
    fn unknown_post_type_maps_to_other() {
        let xml = r#"<posts><row Id="9" PostTypeId="5" CreationDate="2013-01-01T00:00:00.000" /></posts>"#;
        let posts: Result<Vec<_>, _> = parse_posts(xml.as_bytes()).collect();
        let posts = posts.unwrap();
        assert_eq!(posts.len(), 1);
        assert_eq!(posts[0].post_type, PostType::Other);
    }

    #[test]
    fn bad_creation_date_is_record_error_with_row_id() {
        let xml = r#"<posts>
            <row Id="2" PostTypeId="1" CreationDate="not-a-date" />
            <row Id="3" PostTypeId="1" CreationDate="2013-01-01T00:00:00.000" />
        </posts>"#;
        let items: Vec<_> = parse_posts(xml.as_bytes()).collect();
        assert_eq!(items.len(), 2);
        match &items[0] {
            Err(IngestError::Record { row_id, .. }) => assert_eq!(*row_id, 2),
            other => panic!("expected record error, got {other:?}"),
        }
        assert!(items[1].is_ok(), "parsing continues after a record error");
    }

    #[test]
    fn answer_without_parent_is_record_error() {
        let xml = r#"<posts><row Id="8" PostTypeId="2" CreationDate="2013-01-01T00:00:00.000" /></posts>"#;
        let items: Vec<_> = parse_posts(xml.as_bytes()).collect();
        assert!(matches!(items[0], Err(IngestError::Record { row_id: 8, .. })));
    }

    #[test]
    fn malformed_xml_reports_offset_and_stops() {
        let xml = "<posts><row Id=\"1\" PostTypeId=\"1\" CreationDate=\"2013-01-01T00:00:00.000\" /></nope>";
        let items: Vec<_> = parse_posts(xml.as_bytes()).collect();
        assert!(items[0].is_ok());
        match &items[1] {
            Err(IngestError::Xml { offset, .. }) => assert!(*offset > 0),
            other => panic!("expected xml error, got {other:?}"),
        }
        assert_eq!(items.len(), 2, "stream fuses after a fatal error");
    }

    #[test]
    fn users_empty() {
        let users = parse_users("<users></users>".as_bytes()).unwrap();
        assert!(users.is_empty());
    }

    #[test]
    fn users_two_rows() {
        let xml = r#"<users><row Id="7" Reputation="120" /><row Id="9" Reputation="0" /></users>"#;
        let users = parse_users(xml.as_bytes()).unwrap();
        assert_eq!(users.len(), 2);
        assert_eq!(users[&7], 120);
        assert_eq!(users[&9], 0);
    }

    #[test]
    fn duplicate_user_rows_keep_last() {
        let xml = r#"<users><row Id="7" Reputation="120" /><row Id="7" Reputation="999" /></users>"#;
        let users = parse_users(xml.as_bytes()).unwrap();
        assert_eq!(users.len(), 1);
        assert_eq!(users[&7], 999);
    }

    #[test]
    fn timestamp_variants() {
        assert!(parse_timestamp("2013-09-01T12:00:00.000").is_some());
        assert!(parse_timestamp("2013-09-01T12:00:00").is_some());
        assert!(parse_timestamp("2013-09-01T12:00:00Z").is_some());
        assert!(parse_timestamp("bogus").is_none());
    }
}
