//! Helpers shared by the integration tests: fixture paths, a loopback HTTP
//! stub and independent reference implementations.
#![allow(dead_code)]

use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::path::PathBuf;
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::Duration;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub fn expected(name: &str) -> serde_json::Value {
    let text = std::fs::read_to_string(fixture(&format!("{name}.expected.json"))).unwrap();
    serde_json::from_str(&text).unwrap()
}

// ---------------------------------------------------------------------------
// stub server

#[derive(Clone, Debug)]
pub struct Reply {
    pub status: u16,
    pub body: String,
    pub delay: Duration,
}

impl Reply {
    pub fn ok_text(text: &str) -> Self {
        let body = serde_json::json!({
            "id": "stub",
            "object": "chat.completion",
            "choices": [{"index": 0, "message": {"role": "assistant", "content": text}, "finish_reason": "stop"}]
        });
        Self::raw(200, &body.to_string())
    }

    pub fn raw(status: u16, body: &str) -> Self {
        Self { status, body: body.to_string(), delay: Duration::ZERO }
    }

    pub fn delayed(mut self, delay: Duration) -> Self {
        self.delay = delay;
        self
    }
}

#[derive(Debug, Clone)]
pub struct Recorded {
    pub method: String,
    pub path: String,
    pub body: String,
}

/// Answers requests with `replies` in order, repeating the last one forever.
pub struct StubServer {
    pub url: String,
    pub requests: Arc<Mutex<Vec<Recorded>>>,
}

impl StubServer {
    pub fn start(replies: Vec<Reply>) -> Self {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let url = format!("http://{}", listener.local_addr().unwrap());
        let requests = Arc::new(Mutex::new(Vec::new()));
        let log = Arc::clone(&requests);
        thread::spawn(move || {
            let mut served = 0usize;
            for stream in listener.incoming() {
                let Ok(stream) = stream else { continue };
                let reply = replies[served.min(replies.len() - 1)].clone();
                served += 1;
                let log = Arc::clone(&log);
                thread::spawn(move || handle(stream, reply, log));
            }
        });
        Self { url, requests }
    }

    pub fn count(&self) -> usize {
        self.requests.lock().unwrap().len()
    }

    pub fn recorded(&self) -> Vec<Recorded> {
        self.requests.lock().unwrap().clone()
    }
}

fn handle(stream: TcpStream, reply: Reply, log: Arc<Mutex<Vec<Recorded>>>) {
    let mut reader = BufReader::new(stream.try_clone().unwrap());
    let mut request_line = String::new();
    if reader.read_line(&mut request_line).is_err() {
        return;
    }
    let mut parts = request_line.split_whitespace();
    let method = parts.next().unwrap_or_default().to_string();
    let path = parts.next().unwrap_or_default().to_string();
    let mut length = 0usize;
    loop {
        let mut line = String::new();
        if reader.read_line(&mut line).unwrap_or(0) == 0 || line == "\r\n" {
            break;
        }
        if let Some((k, v)) = line.split_once(':') {
            if k.eq_ignore_ascii_case("content-length") {
                length = v.trim().parse().unwrap_or(0);
            }
        }
    }
    let mut body = vec![0u8; length];
    let _ = reader.read_exact(&mut body);
    log.lock().unwrap().push(Recorded {
        method,
        path,
        body: String::from_utf8_lossy(&body).into_owned(),
    });
    thread::sleep(reply.delay);
    let mut stream = stream;
    let _ = write!(
        stream,
        "HTTP/1.1 {} Stub\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{}",
        reply.status,
        reply.body.len(),
        reply.body
    );
    let _ = stream.flush();
}

// ---------------------------------------------------------------------------
// reference implementations

/// `0.5 * (1 - e^(-0.05 * epoch))` in 1e-18 fixed point: e^(x) by its
/// positive Taylor series in integer arithmetic, then one integer division.
pub fn boost_oracle(epoch: u64) -> f64 {
    const SCALE: u128 = 1_000_000_000_000_000_000;
    // x = 0.05 * epoch = epoch / 20
    let (num, den) = (epoch as u128, 20u128);
    let mut term = SCALE; // x^k / k!, fixed point
    let mut sum = SCALE;
    let mut k = 1u128;
    while term > 0 {
        term = term * num / (den * k);
        sum += term;
        k += 1;
    }
    // e^(-x) = 1 / e^(x)
    let inv = SCALE * SCALE / sum;
    0.5 * (SCALE - inv) as f64 / SCALE as f64
}

/// Textbook density clustering: core points (>= min_pts neighbours within
/// eps, self included) unioned when within eps; returns the set of
/// core-connected components and, per non-core point, the components of the
/// cores it can reach.
pub struct DensityOracle {
    pub core: Vec<bool>,
    pub component: Vec<Option<usize>>,
    pub reachable: Vec<Vec<usize>>,
}

pub fn density_oracle(points: &[(f64, f64)], eps: f64, min_pts: usize) -> DensityOracle {
    let n = points.len();
    let d = |i: usize, j: usize| ((points[i].0 - points[j].0).powi(2) + (points[i].1 - points[j].1).powi(2)).sqrt();
    let core: Vec<bool> = (0..n).map(|i| (0..n).filter(|&j| d(i, j) <= eps).count() >= min_pts).collect();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut Vec<usize>, x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        let mut c = x;
        while p[c] != r {
            let next = p[c];
            p[c] = r;
            c = next;
        }
        r
    }
    for i in 0..n {
        for j in 0..i {
            if core[i] && core[j] && d(i, j) <= eps {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                parent[a] = b;
            }
        }
    }
    let component: Vec<Option<usize>> = (0..n).map(|i| core[i].then(|| find(&mut parent, i))).collect();
    let reachable = (0..n)
        .map(|i| {
            if core[i] {
                return Vec::new();
            }
            let mut c: Vec<usize> = (0..n).filter(|&j| core[j] && d(i, j) <= eps).map(|j| component[j].unwrap()).collect();
            c.sort();
            c.dedup();
            c
        })
        .collect();
    DensityOracle { core, component, reachable }
}

/// Exhaustive mean distance to the k nearest other points.
pub fn knn_oracle(points: &[(f64, f64)], k: usize) -> Vec<f64> {
    (0..points.len())
        .map(|i| {
            let mut d: Vec<f64> = (0..points.len())
                .filter(|&j| j != i)
                .map(|j| ((points[i].0 - points[j].0).powi(2) + (points[i].1 - points[j].1).powi(2)).sqrt())
                .collect();
            d.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let take = k.min(d.len());
            d[..take].iter().sum::<f64>() / take as f64
        })
        .collect()
}

/// Day of week (0 = Monday) from a civil date by day counting from
/// 1970-01-01, which was a Thursday.
pub fn weekday_oracle(year: i64, month: i64, day: i64) -> u32 {
    let leap = |y: i64| (y % 4 == 0 && y % 100 != 0) || y % 400 == 0;
    let mut days: i64 = 0;
    for y in 1970..year {
        days += if leap(y) { 366 } else { 365 };
    }
    let lengths = [31, if leap(year) { 29 } else { 28 }, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31];
    days += lengths[..(month - 1) as usize].iter().sum::<i64>();
    days += day - 1;
    ((days + 3).rem_euclid(7)) as u32
}

/// Splits "MM/DD/YYYY hh:mm:ss AM" into (year, month, day, hour24).
pub fn parse_date_oracle(text: &str) -> (i64, i64, i64, i64) {
    let (date, rest) = text.split_once(' ').unwrap();
    let mut d = date.split('/').map(|x| x.parse::<i64>().unwrap());
    let (m, day, y) = (d.next().unwrap(), d.next().unwrap(), d.next().unwrap());
    let (time, ampm) = rest.split_once(' ').unwrap();
    let h12: i64 = time.split(':').next().unwrap().parse().unwrap();
    let h = match (ampm, h12) {
        ("AM", 12) => 0,
        ("AM", h) => h,
        ("PM", 12) => 12,
        (_, h) => h + 12,
    };
    (y, m, day, h)
}

/// Deterministic xorshift stream for generating test inputs.
pub struct Xs(pub u64);

impl Xs {
    pub fn next(&mut self) -> u64 {
        let mut x = self.0;
        x ^= x << 13;
        x ^= x >> 7;
        x ^= x << 17;
        self.0 = x;
        x
    }

    pub fn unit(&mut self) -> f64 {
        (self.next() >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn below(&mut self, n: usize) -> usize {
        (self.next() % n as u64) as usize
    }
}
