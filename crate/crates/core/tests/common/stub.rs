//! Minimal in-process HTTP server speaking the inpainting wire format.

use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::{Arc, Mutex};
use std::thread;

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use morphomod::inpaint::{WireRequest, WireResponse};
use morphomod::raster::{decode_png, encode_png, Image};

#[derive(Clone, Copy, Debug, PartialEq)]
#[allow(dead_code)]
pub enum Behavior {
    /// Returns the submitted image.
    Echo,
    /// Returns a uniform 0.5 image of the submitted size.
    Gray,
    /// Answers with this status and an `{"error": ...}` body.
    Status(u16),
    /// 200 with a body that is not JSON.
    BadJson,
    /// 200 with an `image` field that is not base64.
    BadBase64,
    /// 200 with a valid PNG one row taller than the input.
    WrongDims,
}

pub struct Stub {
    pub url: String,
    #[allow(dead_code)]
    pub requests: Arc<Mutex<Vec<WireRequest>>>,
}

impl Stub {
    pub fn start(behavior: Behavior) -> Stub {
        let listener = TcpListener::bind("127.0.0.1:0").expect("bind stub");
        let url = format!("http://{}", listener.local_addr().unwrap());
        let requests = Arc::new(Mutex::new(Vec::new()));
        let log = Arc::clone(&requests);
        thread::spawn(move || {
            for stream in listener.incoming() {
                let Ok(stream) = stream else { break };
                let log = Arc::clone(&log);
                thread::spawn(move || {
                    let _ = serve(stream, behavior, &log);
                });
            }
        });
        Stub { url, requests }
    }

    #[allow(dead_code)]
    pub fn backend_id(&self) -> String {
        format!("remote:{}", self.url)
    }
}

/// An address nothing listens on.
#[allow(dead_code)]
pub fn dead_endpoint() -> String {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    drop(listener);
    format!("http://{addr}")
}

fn serve(stream: TcpStream, behavior: Behavior, log: &Mutex<Vec<WireRequest>>) -> std::io::Result<()> {
    let mut reader = BufReader::new(stream.try_clone()?);
    let mut length = 0usize;
    let mut line = String::new();
    loop {
        line.clear();
        if reader.read_line(&mut line)? == 0 {
            return Ok(());
        }
        let l = line.trim_end();
        if l.is_empty() {
            break;
        }
        if let Some((k, v)) = l.split_once(':') {
            if k.eq_ignore_ascii_case("content-length") {
                length = v.trim().parse().unwrap_or(0);
            }
        }
    }
    let mut body = vec![0u8; length];
    reader.read_exact(&mut body)?;

    let (status, reply) = match serde_json::from_slice::<WireRequest>(&body) {
        Err(e) => (400, serde_json::json!({ "error": e.to_string() }).to_string()),
        Ok(req) => {
            let reply = respond(&req, behavior);
            log.lock().unwrap().push(req);
            reply
        }
    };
    let mut stream = stream;
    write!(
        stream,
        "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{reply}",
        reply.len()
    )?;
    stream.flush()
}

fn respond(req: &WireRequest, behavior: Behavior) -> (u16, String) {
    let image = || -> Image<f64> {
        let bytes = STANDARD.decode(&req.image).expect("client sent base64");
        decode_png(&bytes).expect("client sent png").into_image()
    };
    let ok = |img: &Image<f64>| {
        let image = STANDARD.encode(encode_png(img).unwrap());
        (200, serde_json::to_string(&WireResponse { image }).unwrap())
    };
    match behavior {
        Behavior::Echo => ok(&image()),
        Behavior::Gray => {
            let (h, w) = image().dims();
            ok(&Image::filled(h, w, [0.5; 3]))
        }
        Behavior::Status(code) => (code, r#"{"error": "model exploded"}"#.to_string()),
        Behavior::BadJson => (200, "<html>not json</html>".to_string()),
        Behavior::BadBase64 => (200, r#"{"image": "***not base64***"}"#.to_string()),
        Behavior::WrongDims => {
            let (h, w) = image().dims();
            ok(&Image::filled(h + 1, w, [0.5; 3]))
        }
    }
}
