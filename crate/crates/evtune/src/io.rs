//! Event CSV reading and writing.
//!
//! Format: header `t_us,x,y,p`, one event per line, timestamps non-decreasing,
//! polarity encoded as 1 = positive, 0 = negative.

use crate::error::{Error, Result};
use crate::events::{Event, EventStream, Polarity};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

pub const EVENT_CSV_HEADER: &str = "t_us,x,y,p";

pub fn write_events<P: AsRef<Path>>(stream: &EventStream, path: P) -> Result<()> {
    let file = File::create(path)?;
    let mut w = BufWriter::new(file);
    write_events_to(stream, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn write_events_to<W: Write>(stream: &EventStream, w: &mut W) -> Result<()> {
    writeln!(w, "# width={} height={}", stream.width, stream.height)?;
    writeln!(w, "{EVENT_CSV_HEADER}")?;
    for ev in stream.events() {
        writeln!(w, "{},{},{},{}", ev.t_us, ev.x, ev.y, ev.polarity.to_disk())?;
    }
    Ok(())
}

pub fn read_events<P: AsRef<Path>>(path: P) -> Result<EventStream> {
    let file = File::open(path)?;
    read_events_from(BufReader::new(file))
}

pub fn read_events_from<R: Read>(reader: R) -> Result<EventStream> {
    let mut lines = BufReader::new(reader).lines();
    let mut line_no = 0usize;

    // Optional dimension comment, then the mandatory header.
    let mut width = 0u32;
    let mut height = 0u32;
    let mut header: Option<String> = None;
    for line in lines.by_ref() {
        let line = line?;
        line_no += 1;
        if let Some(rest) = line.strip_prefix('#') {
            for part in rest.split_whitespace() {
                if let Some(v) = part.strip_prefix("width=") {
                    width = v.parse().map_err(|_| Error::Parse {
                        line: line_no,
                        message: format!("bad width {v:?}"),
                    })?;
                } else if let Some(v) = part.strip_prefix("height=") {
                    height = v.parse().map_err(|_| Error::Parse {
                        line: line_no,
                        message: format!("bad height {v:?}"),
                    })?;
                }
            }
            continue;
        }
        header = Some(line);
        break;
    }
    match header {
        Some(h) if h.trim() == EVENT_CSV_HEADER => {}
        Some(h) => {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected header {EVENT_CSV_HEADER:?}, got {h:?}"),
            })
        }
        None => {
            return Err(Error::Parse {
                line: line_no,
                message: "missing header line".into(),
            })
        }
    }

    let mut events = Vec::new();
    let mut max_x = 0u32;
    let mut max_y = 0u32;
    for line in lines {
        let line = line?;
        line_no += 1;
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        let mut next = |name: &str| {
            fields.next().ok_or(Error::Parse {
                line: line_no,
                message: format!("missing field {name}"),
            })
        };
        let t_us: u64 = parse_field(next("t_us")?, "t_us", line_no)?;
        let x: u32 = parse_field(next("x")?, "x", line_no)?;
        let y: u32 = parse_field(next("y")?, "y", line_no)?;
        let p: u8 = parse_field(next("p")?, "p", line_no)?;
        if fields.next().is_some() {
            return Err(Error::Parse {
                line: line_no,
                message: "too many fields".into(),
            });
        }
        let polarity = Polarity::from_disk(p).ok_or(Error::Parse {
            line: line_no,
            message: format!("polarity must be 0 or 1, got {p}"),
        })?;
        if let Some(last) = events.last() {
            let last: &Event = last;
            if t_us < last.t_us {
                return Err(Error::Validation(format!(
                    "line {line_no}: timestamp {t_us} precedes {}",
                    last.t_us
                )));
            }
        }
        max_x = max_x.max(x);
        max_y = max_y.max(y);
        events.push(Event { t_us, x, y, polarity });
    }

    // Streams written without the dimension comment get the tightest
    // bounding box that admits the events.
    if width == 0 {
        width = max_x + 1;
    }
    if height == 0 {
        height = max_y + 1;
    }
    EventStream::new(width.max(1), height.max(1), events)
}

fn parse_field<T: std::str::FromStr>(s: &str, name: &str, line: usize) -> Result<T> {
    s.trim().parse().map_err(|_| Error::Parse {
        line,
        message: format!("bad {name} value {s:?}"),
    })
}
