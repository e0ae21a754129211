//! Just enough HTTP/1.1 framing for one request and one response per exchange.

use std::io::{self, Read, Write};
use std::net::TcpStream;
use std::time::Instant;

const MAX_HEADERS: usize = 32;
const MAX_MESSAGE: usize = 64 * 1024;

#[derive(Debug)]
pub(crate) enum ReadError {
    Timeout,
    Closed,
    Malformed(String),
    Io,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Kind {
    Request,
    Response,
}

fn content_length(headers: &[httparse::Header<'_>]) -> Result<usize, ReadError> {
    match headers
        .iter()
        .find(|h| h.name.eq_ignore_ascii_case("content-length"))
    {
        None => Ok(0),
        Some(h) => std::str::from_utf8(h.value)
            .ok()
            .and_then(|v| v.trim().parse().ok())
            .ok_or_else(|| ReadError::Malformed("bad Content-Length".into())),
    }
}

/// Total length of the first complete message in `buf`, if there is one.
fn complete_len(buf: &[u8], kind: Kind) -> Result<Option<usize>, ReadError> {
    let mut headers = [httparse::EMPTY_HEADER; MAX_HEADERS];
    let status = match kind {
        Kind::Request => httparse::Request::new(&mut headers).parse(buf),
        Kind::Response => httparse::Response::new(&mut headers).parse(buf),
    }
    .map_err(|e| ReadError::Malformed(e.to_string()))?;
    let httparse::Status::Complete(head_len) = status else {
        return Ok(None);
    };
    let body_len = content_length(&headers)?;
    let total = head_len + body_len;
    Ok((buf.len() >= total).then_some(total))
}

/// Reads until `buf` starts with one complete message or the deadline passes.
pub(crate) fn read_message(
    stream: &mut TcpStream,
    buf: &mut Vec<u8>,
    kind: Kind,
    deadline: Instant,
) -> Result<usize, ReadError> {
    let mut chunk = [0u8; 4096];
    loop {
        if let Some(total) = complete_len(buf, kind)? {
            return Ok(total);
        }
        if buf.len() > MAX_MESSAGE {
            return Err(ReadError::Malformed("message too large".into()));
        }
        let now = Instant::now();
        if now >= deadline {
            return Err(ReadError::Timeout);
        }
        stream
            .set_read_timeout(Some(deadline - now))
            .map_err(|_| ReadError::Io)?;
        match stream.read(&mut chunk) {
            Ok(0) => return Err(ReadError::Closed),
            Ok(n) => buf.extend_from_slice(&chunk[..n]),
            Err(e)
                if matches!(
                    e.kind(),
                    io::ErrorKind::WouldBlock | io::ErrorKind::TimedOut
                ) =>
            {
                if Instant::now() >= deadline {
                    return Err(ReadError::Timeout);
                }
            }
            Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
            Err(_) => return Err(ReadError::Io),
        }
    }
}

/// Fields the server needs from a request.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct ParsedRequest {
    pub method: String,
    pub path: String,
    pub id: Option<u64>,
    pub body: Vec<u8>,
    pub keep_alive: bool,
}

pub(crate) fn parse_request(raw: &[u8]) -> Result<ParsedRequest, ReadError> {
    let mut headers = [httparse::EMPTY_HEADER; MAX_HEADERS];
    let mut req = httparse::Request::new(&mut headers);
    let httparse::Status::Complete(head_len) = req
        .parse(raw)
        .map_err(|e| ReadError::Malformed(e.to_string()))?
    else {
        return Err(ReadError::Malformed("incomplete request".into()));
    };
    let header = |name: &str| {
        req.headers
            .iter()
            .find(|h| h.name.eq_ignore_ascii_case(name))
            .and_then(|h| std::str::from_utf8(h.value).ok())
            .map(str::trim)
    };
    let id = header(crate::message::ID_HEADER).and_then(|v| v.parse().ok());
    let keep_alive = header("connection").is_some_and(|v| v.eq_ignore_ascii_case("keep-alive"));
    Ok(ParsedRequest {
        method: req.method.unwrap_or_default().to_string(),
        path: req.path.unwrap_or_default().to_string(),
        id,
        body: raw[head_len..].to_vec(),
        keep_alive,
    })
}

pub(crate) struct ParsedResponse {
    pub status: u16,
    pub body: Vec<u8>,
}

pub(crate) fn parse_response(raw: &[u8]) -> Result<ParsedResponse, ReadError> {
    let mut headers = [httparse::EMPTY_HEADER; MAX_HEADERS];
    let mut resp = httparse::Response::new(&mut headers);
    let httparse::Status::Complete(head_len) = resp
        .parse(raw)
        .map_err(|e| ReadError::Malformed(e.to_string()))?
    else {
        return Err(ReadError::Malformed("incomplete response".into()));
    };
    Ok(ParsedResponse {
        status: resp.code.unwrap_or(0),
        body: raw[head_len..].to_vec(),
    })
}

pub(crate) fn write_response(
    stream: &mut TcpStream,
    status: u16,
    reason: &str,
    body: &[u8],
    keep_alive: bool,
) -> io::Result<()> {
    let connection = if keep_alive { "keep-alive" } else { "close" };
    let mut out = format!(
        "HTTP/1.1 {status} {reason}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: {connection}\r\n\r\n",
        body.len()
    )
    .into_bytes();
    out.extend_from_slice(body);
    stream.write_all(&out)?;
    stream.flush()
}
