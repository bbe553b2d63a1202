//! Fixtures for driving the `xraysegkit` binary.
#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rand::rngs::StdRng;
use rand::Rng;
use xraysegkit_core::geometry::Point;
use xraysegkit_core::imaging::{save_image, GrayImage, ImageFormat};
use xraysegkit_core::labels::{rasterize_polygon, serialize_label_file, serialize_prediction_file, PolygonAnnotation};
use xraysegkit_core::metrics::ImageSample;

pub const BONES: [&str; 6] = ["carpal", "fracture", "metacarpal", "phalanx", "radius", "ulna"];

pub fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_xraysegkit"))
}

/// Runs the binary and returns its output; panics only if it cannot start.
pub fn run(args: &[&str]) -> Output {
    bin().args(args).env("XRAYSEGKIT_LOG", "warn").output().expect("binary starts")
}

pub fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

pub fn p(path: &Path) -> &str {
    path.to_str().expect("utf-8 path")
}

/// Writes `class k name` lines plus `images`/`labels` directories under `root`.
pub fn write_descriptor(root: &Path, class_names: &[&str]) -> PathBuf {
    fs::create_dir_all(root.join("images")).unwrap();
    fs::create_dir_all(root.join("labels")).unwrap();
    let mut text = String::from("# synthetic dataset\n");
    for (i, c) in class_names.iter().enumerate() {
        text.push_str(&format!("class {i} {c}\n"));
    }
    text.push_str("images_dir images\nlabels_dir labels\n");
    let path = root.join("data.txt");
    fs::write(&path, text).unwrap();
    path
}

/// Radiograph-like image: dark noisy background, bright filled polygons.
pub fn render(w: usize, h: usize, anns: &[PolygonAnnotation], rng: &mut StdRng) -> GrayImage {
    let mut img = GrayImage::from_fn(w, h, |_, _| rng.random_range(20..60)).unwrap();
    for a in anns {
        let m = rasterize_polygon(a, w, h);
        let level = 150 + 15 * a.class_id as u8;
        for y in 0..h {
            for x in 0..w {
                if m.get(x, y) {
                    img.set(x, y, level.saturating_add(rng.random_range(0..30)));
                }
            }
        }
    }
    img
}

/// `n` images of `size x size`, each with non-overlapping convex instances
/// in a 3x3 grid of cells; every class appears at least once.
pub fn bone_dataset(root: &Path, n: usize, size: usize, rng: &mut StdRng) -> (PathBuf, Vec<(String, Vec<PolygonAnnotation>)>) {
    let descriptor = write_descriptor(root, &BONES);
    let mut out = Vec::new();
    for i in 0..n {
        let mut cells: Vec<usize> = (0..9).collect();
        for k in (1..9).rev() {
            cells.swap(k, rng.random_range(0..=k));
        }
        let count = rng.random_range(1..=6);
        let anns: Vec<PolygonAnnotation> = cells[..count]
            .iter()
            .enumerate()
            .map(|(j, &cell)| {
                let class = if i * 6 + j < BONES.len() * 2 { (i * 6 + j) % BONES.len() } else { rng.random_range(0..BONES.len()) };
                let (cx, cy) = ((cell % 3) as f64 / 3.0 + 1.0 / 6.0, (cell / 3) as f64 / 3.0 + 1.0 / 6.0);
                let (rx, ry) = (rng.random_range(0.1..0.15), rng.random_range(0.1..0.15));
                let n = rng.random_range(8..=14);
                let v: Vec<Point> = (0..n)
                    .map(|k| {
                        let t = std::f64::consts::TAU * (k as f64 + rng.random_range(0.0..0.3)) / n as f64;
                        Point::new(cx + rx * t.cos(), cy + ry * t.sin())
                    })
                    .collect();
                PolygonAnnotation::new(class, v).unwrap()
            })
            .collect();
        let stem = format!("xray{i:03}");
        let img = render(size, size, &anns, rng);
        save_image(&img, root.join(format!("images/{stem}.png")), ImageFormat::Png).unwrap();
        fs::write(root.join(format!("labels/{stem}.txt")), serialize_label_file(&anns)).unwrap();
        out.push((stem, anns));
    }
    (descriptor, out)
}

/// Writes a planted evaluation set to disk: blank images of the right size,
/// ground-truth labels and prediction files.
pub fn write_planted(root: &Path, names: &[String], images: &[ImageSample]) -> (PathBuf, PathBuf) {
    let refs: Vec<&str> = names.iter().map(String::as_str).collect();
    let descriptor = write_descriptor(root, &refs);
    let preds = root.join("predictions");
    fs::create_dir_all(&preds).unwrap();
    for s in images {
        let img = GrayImage::filled(s.width, s.height, 0).unwrap();
        save_image(&img, root.join(format!("images/{}.png", s.stem)), ImageFormat::Png).unwrap();
        fs::write(root.join(format!("labels/{}.txt", s.stem)), serialize_label_file(&s.ground_truth)).unwrap();
        fs::write(preds.join(format!("{}.txt", s.stem)), serialize_prediction_file(&s.predictions)).unwrap();
    }
    (descriptor, preds)
}

/// Every regular file under `dir` as (relative path, bytes), sorted.
pub fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let path = e.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
                out.push((rel, fs::read(&path).unwrap()));
            }
        }
    }
    out.sort();
    out
}

/// One HTTP/1.1 request over a fresh connection; returns status and body.
pub fn http(addr: &str, method: &str, path: &str, body: Option<&str>) -> std::io::Result<(u16, Vec<u8>)> {
    use std::io::{Read, Write};
    let mut s = std::net::TcpStream::connect(addr)?;
    let body = body.unwrap_or("");
    write!(
        s,
        "{method} {path} HTTP/1.1\r\nHost: {addr}\r\nConnection: close\r\nContent-Type: application/json\r\nContent-Length: {}\r\n\r\n{body}",
        body.len()
    )?;
    let mut raw = Vec::new();
    s.read_to_end(&mut raw)?;
    let split = raw
        .windows(4)
        .position(|w| w == b"\r\n\r\n")
        .ok_or_else(|| std::io::Error::other("no header terminator"))?;
    let head = String::from_utf8_lossy(&raw[..split]).into_owned();
    let status = head
        .split_whitespace()
        .nth(1)
        .and_then(|c| c.parse().ok())
        .ok_or_else(|| std::io::Error::other("no status"))?;
    let mut payload = raw[split + 4..].to_vec();
    if head.to_ascii_lowercase().contains("transfer-encoding: chunked") {
        payload = dechunk(&payload);
    }
    Ok((status, payload))
}

fn dechunk(mut data: &[u8]) -> Vec<u8> {
    let mut out = Vec::new();
    while let Some(eol) = data.windows(2).position(|w| w == b"\r\n") {
        let size = usize::from_str_radix(std::str::from_utf8(&data[..eol]).unwrap_or("0").trim(), 16).unwrap_or(0);
        if size == 0 {
            break;
        }
        out.extend_from_slice(&data[eol + 2..eol + 2 + size]);
        data = &data[eol + 4 + size..];
    }
    out
}

/// A `serve` child process on an ephemeral port.
pub struct Server {
    pub child: std::process::Child,
    pub addr: String,
}

impl Server {
    pub fn start(descriptor: &Path) -> Server {
        use std::io::{BufRead, BufReader};
        let mut child = bin()
            .args(["serve", "--dataset", p(descriptor), "--port", "0"])
            .env("XRAYSEGKIT_LOG", "warn")
            .stdout(std::process::Stdio::piped())
            .spawn()
            .expect("binary starts");
        let mut line = String::new();
        BufReader::new(child.stdout.take().unwrap()).read_line(&mut line).unwrap();
        let addr = line
            .trim()
            .rsplit("http://")
            .next()
            .expect("listening address printed")
            .to_string();
        Server { child, addr }
    }

    /// Sends SIGINT and waits for the exit status.
    pub fn interrupt(mut self) -> std::process::ExitStatus {
        let pid = self.child.id().to_string();
        Command::new("kill").args(["-INT", &pid]).status().unwrap();
        let status = self.child.wait().unwrap();
        std::mem::forget(self);
        status
    }
}

impl Drop for Server {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}
