//! Event types, the line-based log format, and log validation.
//!
//! A log is a totally ordered sequence of four event kinds: a user joins,
//! posts an original message, reposts a message they received, or follows
//! another user. The on-disk format is one tab-separated line per event:
//!
//! ```text
//! <time>\tjoin\t<user>
//! <time>\tpost\t<author>\t<message>
//! <time>\trepost\t<user>\t<message>\t<parent_user>
//! <time>\tfollow\t<creator>\t<target>
//! ```
//!
//! Lines starting with `#` are ignored. Ids are decimal non-negative
//! integers; times are non-negative and non-decreasing (integer ticks by
//! default, real values accepted). Parsing interns user ids densely in
//! first-appearance order and synthesizes a `join` for any user that first
//! appears inside another event.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use alloc::collections::{BTreeMap, BTreeSet};

/// Dense internal user id, assigned in first-appearance order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct UserId(pub u32);

impl fmt::Display for UserId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl UserId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Message id, kept as written in the log.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MessageId(pub u64);

impl fmt::Display for MessageId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EventKind {
    Join {
        user: UserId,
    },
    Post {
        author: UserId,
        message: MessageId,
    },
    Repost {
        user: UserId,
        message: MessageId,
        parent: UserId,
    },
    /// `creator` starts following `target`: messages flow target -> creator.
    Follow {
        creator: UserId,
        target: UserId,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    /// Position in the log, 0-based.
    pub seq: u64,
    /// Non-negative, non-decreasing timestamp in arbitrary units.
    pub time: f64,
    pub kind: EventKind,
}

/// Machine-readable violation / parse-error codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViolationCode {
    Malformed,
    BadTime,
    SeqOrder,
    TimeOrder,
    DuplicateJoin,
    MissingJoin,
    SelfFollow,
    DuplicateEdge,
    SelfRepost,
    DuplicateMessage,
    UnknownMessage,
    ParentNotHolder,
    AlreadyHolder,
}

impl ViolationCode {
    pub fn as_str(self) -> &'static str {
        match self {
            ViolationCode::Malformed => "malformed",
            ViolationCode::BadTime => "bad-time",
            ViolationCode::SeqOrder => "seq-order",
            ViolationCode::TimeOrder => "time-order",
            ViolationCode::DuplicateJoin => "duplicate-join",
            ViolationCode::MissingJoin => "missing-join",
            ViolationCode::SelfFollow => "self-follow",
            ViolationCode::DuplicateEdge => "duplicate-edge",
            ViolationCode::SelfRepost => "self-repost",
            ViolationCode::DuplicateMessage => "duplicate-message",
            ViolationCode::UnknownMessage => "unknown-message",
            ViolationCode::ParentNotHolder => "parent-not-holder",
            ViolationCode::AlreadyHolder => "already-holder",
        }
    }
}

impl fmt::Display for ViolationCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One invariant violation found by [`validate_log`].
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub seq: u64,
    pub code: ViolationCode,
    pub detail: String,
}

/// Parse failure, pointing at the 1-based source line.
#[derive(Debug, Clone, PartialEq)]
pub struct ParseError {
    pub line: usize,
    pub code: ViolationCode,
    pub detail: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}: {}", self.line, self.code, self.detail)
    }
}

/// Serialization refusal: the input sequence violates an invariant.
#[derive(Debug, Clone, PartialEq)]
pub struct InvalidLog {
    pub first: Violation,
    pub total: usize,
}

impl fmt::Display for InvalidLog {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "invalid log ({} violations, first at seq {}: {}: {})",
            self.total, self.first.seq, self.first.code, self.first.detail
        )
    }
}

/// Parse a log from text. User ids are interned densely in first-appearance
/// order; a `join` is synthesized immediately before the first event that
/// references a not-yet-joined user. The result is fully validated.
pub fn parse_log(input: &str) -> Result<Vec<Event>, ParseError> {
    let mut events: Vec<Event> = Vec::new();
    // 1-based source line for each emitted event (synthesized joins point at
    // the referencing line).
    let mut lines_of: Vec<usize> = Vec::new();
    let mut intern: BTreeMap<u64, u32> = BTreeMap::new();

    for (lineno0, raw) in input.lines().enumerate() {
        let lineno = lineno0 + 1;
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() < 3 {
            return Err(ParseError {
                line: lineno,
                code: ViolationCode::Malformed,
                detail: format!("expected at least 3 tab-separated fields, got {}", fields.len()),
            });
        }
        let time: f64 = fields[0].parse().map_err(|_| ParseError {
            line: lineno,
            code: ViolationCode::BadTime,
            detail: format!("unparseable time {:?}", fields[0]),
        })?;
        if !time.is_finite() || time < 0.0 {
            return Err(ParseError {
                line: lineno,
                code: ViolationCode::BadTime,
                detail: format!("time must be finite and non-negative, got {:?}", fields[0]),
            });
        }

        let parse_id = |s: &str| -> Result<u64, ParseError> {
            s.parse().map_err(|_| ParseError {
                line: lineno,
                code: ViolationCode::Malformed,
                detail: format!("unparseable id {s:?}"),
            })
        };
        let arity = |n: usize| -> Result<(), ParseError> {
            if fields.len() != n {
                Err(ParseError {
                    line: lineno,
                    code: ViolationCode::Malformed,
                    detail: format!("expected {n} fields for {:?}, got {}", fields[1], fields.len()),
                })
            } else {
                Ok(())
            }
        };

        // Interns an id, synthesizing a join for first appearances unless the
        // current line is itself that user's join.
        let mut touch = |ext: u64,
                         events: &mut Vec<Event>,
                         lines_of: &mut Vec<usize>,
                         is_join_line: bool|
         -> UserId {
            if let Some(&id) = intern.get(&ext) {
                return UserId(id);
            }
            let id = intern.len() as u32;
            intern.insert(ext, id);
            if !is_join_line {
                events.push(Event {
                    seq: events.len() as u64,
                    time,
                    kind: EventKind::Join { user: UserId(id) },
                });
                lines_of.push(lineno);
            }
            UserId(id)
        };

        let kind = match fields[1] {
            "join" => {
                arity(3)?;
                let user = touch(parse_id(fields[2])?, &mut events, &mut lines_of, true);
                EventKind::Join { user }
            }
            "post" => {
                arity(4)?;
                let author = touch(parse_id(fields[2])?, &mut events, &mut lines_of, false);
                EventKind::Post {
                    author,
                    message: MessageId(parse_id(fields[3])?),
                }
            }
            "repost" => {
                arity(5)?;
                let user = touch(parse_id(fields[2])?, &mut events, &mut lines_of, false);
                let message = MessageId(parse_id(fields[3])?);
                let parent = touch(parse_id(fields[4])?, &mut events, &mut lines_of, false);
                EventKind::Repost { user, message, parent }
            }
            "follow" => {
                arity(4)?;
                let creator = touch(parse_id(fields[2])?, &mut events, &mut lines_of, false);
                let target = touch(parse_id(fields[3])?, &mut events, &mut lines_of, false);
                EventKind::Follow { creator, target }
            }
            other => {
                return Err(ParseError {
                    line: lineno,
                    code: ViolationCode::Malformed,
                    detail: format!("unknown event kind {other:?}"),
                })
            }
        };
        events.push(Event {
            seq: events.len() as u64,
            time,
            kind,
        });
        lines_of.push(lineno);
    }

    let violations = validate_log(&events);
    if let Some(v) = violations.into_iter().next() {
        return Err(ParseError {
            line: lines_of[v.seq as usize],
            code: v.code,
            detail: v.detail,
        });
    }
    Ok(events)
}

/// Serialize a log to text. Refuses sequences that fail [`validate_log`],
/// so that `parse_log(write_log(e)) == e` holds for everything written.
pub fn write_log(events: &[Event]) -> Result<String, InvalidLog> {
    let violations = validate_log(events);
    if !violations.is_empty() {
        let total = violations.len();
        return Err(InvalidLog {
            first: violations.into_iter().next().unwrap(),
            total,
        });
    }
    let mut out = String::new();
    for ev in events {
        write_event_line(&mut out, ev);
    }
    Ok(out)
}

/// Append one formatted event line (with trailing newline).
pub fn write_event_line(out: &mut String, ev: &Event) {
    let mut t = String::new();
    format_time(&mut t, ev.time);
    match ev.kind {
        EventKind::Join { user } => {
            out.push_str(&format!("{t}\tjoin\t{user}\n"));
        }
        EventKind::Post { author, message } => {
            out.push_str(&format!("{t}\tpost\t{author}\t{message}\n"));
        }
        EventKind::Repost { user, message, parent } => {
            out.push_str(&format!("{t}\trepost\t{user}\t{message}\t{parent}\n"));
        }
        EventKind::Follow { creator, target } => {
            out.push_str(&format!("{t}\tfollow\t{creator}\t{target}\n"));
        }
    }
}

// Integral times print as integers so tick-based logs stay in canonical form.
fn format_time(out: &mut String, t: f64) {
    if t >= 0.0 && t <= u64::MAX as f64 && libm::floor(t) == t {
        out.push_str(&format!("{}", t as u64));
    } else {
        out.push_str(&format!("{t}"));
    }
}

/// Check every log invariant and report each violation with the seq where it
/// occurs. An empty report means the log is valid. Violations are data, not
/// errors: the walk continues past them where possible.
pub fn validate_log(events: &[Event]) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut joined: BTreeSet<UserId> = BTreeSet::new();
    // (source, sink): sink follows source
    let mut edges: BTreeSet<(UserId, UserId)> = BTreeSet::new();
    // message -> holders; presence implies the message was posted
    let mut holders: BTreeMap<MessageId, BTreeSet<UserId>> = BTreeMap::new();
    let mut last_time = 0.0f64;

    for (idx, ev) in events.iter().enumerate() {
        let mut flag = |code: ViolationCode, detail: String| {
            out.push(Violation {
                seq: ev.seq,
                code,
                detail,
            });
        };

        if ev.seq != idx as u64 {
            flag(
                ViolationCode::SeqOrder,
                format!("seq {} at position {idx}", ev.seq),
            );
        }
        if !ev.time.is_finite() || ev.time < 0.0 {
            flag(ViolationCode::BadTime, format!("time {}", ev.time));
        } else if idx > 0 && ev.time < last_time {
            flag(
                ViolationCode::TimeOrder,
                format!("time {} after {}", ev.time, last_time),
            );
        }
        if ev.time.is_finite() && ev.time >= last_time {
            last_time = ev.time;
        }

        let mut check_joined = |user: UserId, role: &str| {
            if !joined.contains(&user) {
                out.push(Violation {
                    seq: ev.seq,
                    code: ViolationCode::MissingJoin,
                    detail: format!("{role} {user} has no earlier join"),
                });
            }
        };

        match ev.kind {
            EventKind::Join { user } => {
                if !joined.insert(user) {
                    out.push(Violation {
                        seq: ev.seq,
                        code: ViolationCode::DuplicateJoin,
                        detail: format!("user {user} already joined"),
                    });
                }
            }
            EventKind::Post { author, message } => {
                check_joined(author, "author");
                match holders.get(&message) {
                    Some(_) => out.push(Violation {
                        seq: ev.seq,
                        code: ViolationCode::DuplicateMessage,
                        detail: format!("message {message} already posted"),
                    }),
                    None => {
                        let mut set = BTreeSet::new();
                        set.insert(author);
                        holders.insert(message, set);
                    }
                }
            }
            EventKind::Repost { user, message, parent } => {
                check_joined(user, "reposter");
                check_joined(parent, "parent");
                if user == parent {
                    out.push(Violation {
                        seq: ev.seq,
                        code: ViolationCode::SelfRepost,
                        detail: format!("user {user} reposting from self"),
                    });
                }
                match holders.get_mut(&message) {
                    None => out.push(Violation {
                        seq: ev.seq,
                        code: ViolationCode::UnknownMessage,
                        detail: format!("message {message} never posted"),
                    }),
                    Some(set) => {
                        if !set.contains(&parent) {
                            out.push(Violation {
                                seq: ev.seq,
                                code: ViolationCode::ParentNotHolder,
                                detail: format!("parent {parent} never held message {message}"),
                            });
                        }
                        if !set.insert(user) {
                            out.push(Violation {
                                seq: ev.seq,
                                code: ViolationCode::AlreadyHolder,
                                detail: format!("user {user} already holds message {message}"),
                            });
                        }
                    }
                }
            }
            EventKind::Follow { creator, target } => {
                check_joined(creator, "creator");
                check_joined(target, "target");
                if creator == target {
                    out.push(Violation {
                        seq: ev.seq,
                        code: ViolationCode::SelfFollow,
                        detail: format!("user {creator} following self"),
                    });
                } else if !edges.insert((target, creator)) {
                    out.push(Violation {
                        seq: ev.seq,
                        code: ViolationCode::DuplicateEdge,
                        detail: format!("{creator} already follows {target}"),
                    });
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use alloc::vec;

    fn ev(seq: u64, time: f64, kind: EventKind) -> Event {
        Event { seq, time, kind }
    }

    #[test]
    fn empty_stream_parses_to_empty_sequence() {
        assert_eq!(parse_log("").unwrap(), vec![]);
        assert_eq!(write_log(&[]).unwrap(), "");
    }

    #[test]
    fn two_joins() {
        let events = parse_log("0\tjoin\t0\n1\tjoin\t1\n").unwrap();
        assert_eq!(
            events,
            vec![
                ev(0, 0.0, EventKind::Join { user: UserId(0) }),
                ev(1, 1.0, EventKind::Join { user: UserId(1) }),
            ]
        );
    }

    #[test]
    fn six_line_fixture_round_trips_byte_identically() {
        let text = "0\tjoin\t0\n\
                    1\tjoin\t1\n\
                    2\tpost\t0\t0\n\
                    3\tfollow\t1\t0\n\
                    4\trepost\t1\t0\t0\n\
                    5\tfollow\t0\t1\n";
        let events = parse_log(text).unwrap();
        assert_eq!(
            events,
            vec![
                ev(0, 0.0, EventKind::Join { user: UserId(0) }),
                ev(1, 1.0, EventKind::Join { user: UserId(1) }),
                ev(
                    2,
                    2.0,
                    EventKind::Post {
                        author: UserId(0),
                        message: MessageId(0)
                    }
                ),
                ev(
                    3,
                    3.0,
                    EventKind::Follow {
                        creator: UserId(1),
                        target: UserId(0)
                    }
                ),
                ev(
                    4,
                    4.0,
                    EventKind::Repost {
                        user: UserId(1),
                        message: MessageId(0),
                        parent: UserId(0)
                    }
                ),
                ev(
                    5,
                    5.0,
                    EventKind::Follow {
                        creator: UserId(0),
                        target: UserId(1)
                    }
                ),
            ]
        );
        assert_eq!(write_log(&events).unwrap(), text);
    }

    #[test]
    fn follow_line_format() {
        let events = vec![
            ev(0, 0.0, EventKind::Join { user: UserId(0) }),
            ev(1, 3.0, EventKind::Join { user: UserId(1) }),
            ev(
                2,
                7.0,
                EventKind::Follow {
                    creator: UserId(0),
                    target: UserId(1),
                },
            ),
        ];
        let text = write_log(&events).unwrap();
        assert_eq!(text.lines().nth(2), Some("7\tfollow\t0\t1"));
    }

    #[test]
    fn comments_and_blank_lines_ignored() {
        let events = parse_log("# header\n\n0\tjoin\t9\n# trailing\n").unwrap();
        assert_eq!(events.len(), 1);
    }

    #[test]
    fn interning_is_first_appearance_order() {
        // External ids 50 and 7 must become 0 and 1.
        let events = parse_log("0\tjoin\t50\n0\tjoin\t7\n0\tfollow\t7\t50\n").unwrap();
        assert_eq!(
            events[2].kind,
            EventKind::Follow {
                creator: UserId(1),
                target: UserId(0)
            }
        );
    }

    #[test]
    fn joins_synthesized_for_first_appearances() {
        let events = parse_log("5\tpost\t3\t100\n6\tfollow\t4\t3\n").unwrap();
        assert_eq!(events.len(), 4);
        assert_eq!(events[0].kind, EventKind::Join { user: UserId(0) });
        assert_eq!(events[0].time, 5.0);
        assert_eq!(
            events[1].kind,
            EventKind::Post {
                author: UserId(0),
                message: MessageId(100)
            }
        );
        assert_eq!(events[2].kind, EventKind::Join { user: UserId(1) });
        // Round trip after synthesis is stable.
        let text = write_log(&events).unwrap();
        assert_eq!(parse_log(&text).unwrap(), events);
    }

    #[test]
    fn parse_errors_carry_line_and_code() {
        let err = parse_log("0\tjoin\t0\nnot a line\n").unwrap_err();
        assert_eq!(err.line, 2);
        assert_eq!(err.code, ViolationCode::Malformed);

        let err = parse_log("1\tjoin\t0\n0\tjoin\t1\n").unwrap_err();
        assert_eq!(err.line, 2);
        assert_eq!(err.code, ViolationCode::TimeOrder);

        let err = parse_log("0\tjoin\t0\n0\tjoin\t1\n1\tfollow\t0\t1\n2\tfollow\t0\t1\n")
            .unwrap_err();
        assert_eq!(err.line, 4);
        assert_eq!(err.code, ViolationCode::DuplicateEdge);

        let err = parse_log("0\tjoin\t0\n0\tjoin\t1\n1\trepost\t1\t5\t0\n").unwrap_err();
        assert_eq!(err.line, 3);
        assert_eq!(err.code, ViolationCode::UnknownMessage);

        let err = parse_log("0\tjoin\t0\n1\tfollow\t0\t0\n").unwrap_err();
        assert_eq!(err.code, ViolationCode::SelfFollow);

        let err = parse_log("-1\tjoin\t0\n").unwrap_err();
        assert_eq!(err.code, ViolationCode::BadTime);
    }

    #[test]
    fn validate_reports_each_violation() {
        // Valid log: empty report.
        let good = parse_log("0\tjoin\t0\n1\tjoin\t1\n2\tfollow\t1\t0\n").unwrap();
        assert!(validate_log(&good).is_empty());

        // Duplicate follow flagged at the second follow's seq.
        let events = vec![
            ev(0, 0.0, EventKind::Join { user: UserId(0) }),
            ev(1, 0.0, EventKind::Join { user: UserId(1) }),
            ev(
                2,
                1.0,
                EventKind::Follow {
                    creator: UserId(1),
                    target: UserId(0),
                },
            ),
            ev(
                3,
                2.0,
                EventKind::Follow {
                    creator: UserId(1),
                    target: UserId(0),
                },
            ),
        ];
        let report = validate_log(&events);
        assert_eq!(report.len(), 1);
        assert_eq!(report[0].seq, 3);
        assert_eq!(report[0].code, ViolationCode::DuplicateEdge);

        // Repost citing a parent who never held the message.
        let events = vec![
            ev(0, 0.0, EventKind::Join { user: UserId(0) }),
            ev(1, 0.0, EventKind::Join { user: UserId(1) }),
            ev(2, 0.0, EventKind::Join { user: UserId(2) }),
            ev(
                3,
                1.0,
                EventKind::Post {
                    author: UserId(0),
                    message: MessageId(0),
                },
            ),
            ev(
                4,
                2.0,
                EventKind::Repost {
                    user: UserId(2),
                    message: MessageId(0),
                    parent: UserId(1),
                },
            ),
        ];
        let report = validate_log(&events);
        assert_eq!(report.len(), 1);
        assert_eq!(report[0].seq, 4);
        assert_eq!(report[0].code, ViolationCode::ParentNotHolder);
    }

    #[test]
    fn write_refuses_invalid_input() {
        let events = vec![ev(
            0,
            0.0,
            EventKind::Post {
                author: UserId(0),
                message: MessageId(0),
            },
        )];
        let err = write_log(&events).unwrap_err();
        assert_eq!(err.first.code, ViolationCode::MissingJoin);
        assert!(err.to_string().contains("missing-join"));
    }

    #[test]
    fn fractional_times_accepted_and_round_trip() {
        let events = parse_log("0.5\tjoin\t0\n1.25\tpost\t0\t0\n").unwrap();
        assert_eq!(events[0].time, 0.5);
        let text = write_log(&events).unwrap();
        assert_eq!(text, "0.5\tjoin\t0\n1.25\tpost\t0\t0\n");
        assert_eq!(parse_log(&text).unwrap(), events);
    }
}
