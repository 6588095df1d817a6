//! Operator console server: one port serving static files over HTTP and the
//! status/command protocol over WebSocket.

use std::io::{Read, Write};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::path::{Component, Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::{self, JoinHandle};
use std::time::Duration;

use brainsync::session::{ConsoleMessage, OperatorMessage, StatusQueue};
use crossbeam::channel::{unbounded, Receiver, Sender};
use tungstenite::{Message, WebSocket};

const POLL: Duration = Duration::from_millis(10);

type Subscribers = Arc<Mutex<Vec<Sender<String>>>>;

/// Running server; [`ConsoleServer::shutdown`] flushes pending status and joins.
pub struct ConsoleServer {
    addr: SocketAddr,
    stop: Arc<AtomicBool>,
    threads: Vec<JoinHandle<()>>,
    clients: Arc<Mutex<Vec<JoinHandle<()>>>>,
}

impl ConsoleServer {
    /// Binds `addr`, then forwards every message pushed to `status` to all
    /// connected clients and every valid client message to `commands`.
    pub fn start(
        addr: SocketAddr,
        static_dir: Option<PathBuf>,
        status: StatusQueue,
        commands: Sender<OperatorMessage>,
    ) -> std::io::Result<Self> {
        let listener = TcpListener::bind(addr)?;
        listener.set_nonblocking(true)?;
        let addr = listener.local_addr()?;
        let stop = Arc::new(AtomicBool::new(false));
        let drained = Arc::new(AtomicBool::new(false));
        let subscribers: Subscribers = Arc::default();
        let clients: Arc<Mutex<Vec<JoinHandle<()>>>> = Arc::default();

        let broadcaster = {
            let stop = stop.clone();
            let drained = drained.clone();
            let subscribers = subscribers.clone();
            thread::spawn(move || loop {
                // Read the flag first so the final drain sees everything pushed before shutdown.
                let stopping = stop.load(Ordering::SeqCst);
                for msg in status.drain() {
                    broadcast(&subscribers, &msg);
                }
                if stopping {
                    subscribers.lock().expect("subscriber lock").clear();
                    drained.store(true, Ordering::SeqCst);
                    break;
                }
                thread::sleep(POLL);
            })
        };

        let acceptor = {
            let stop = stop.clone();
            let clients = clients.clone();
            thread::spawn(move || {
                while !stop.load(Ordering::SeqCst) {
                    match listener.accept() {
                        Ok((stream, peer)) => {
                            let static_dir = static_dir.clone();
                            let subscribers = subscribers.clone();
                            let commands = commands.clone();
                            let drained = drained.clone();
                            let handle = thread::spawn(move || {
                                if let Err(e) = serve_connection(stream, static_dir.as_deref(), subscribers, commands, drained)
                                {
                                    log::debug!("console connection {peer}: {e}");
                                }
                            });
                            clients.lock().expect("client lock").push(handle);
                        }
                        Err(e) if e.kind() == std::io::ErrorKind::WouldBlock => thread::sleep(POLL),
                        Err(e) => {
                            log::warn!("console accept failed: {e}");
                            thread::sleep(POLL);
                        }
                    }
                }
            })
        };

        log::info!("operator console listening on http://{addr}/");
        Ok(Self {
            addr,
            stop,
            threads: vec![broadcaster, acceptor],
            clients,
        })
    }

    pub fn local_addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn shutdown(self) {
        self.stop.store(true, Ordering::SeqCst);
        for t in self.threads {
            let _ = t.join();
        }
        let clients = std::mem::take(&mut *self.clients.lock().expect("client lock"));
        for c in clients {
            let _ = c.join();
        }
    }
}

fn broadcast(subscribers: &Subscribers, msg: &ConsoleMessage) {
    let text = match serde_json::to_string(msg) {
        Ok(t) => t,
        Err(e) => {
            log::warn!("cannot serialise console message: {e}");
            return;
        }
    };
    subscribers
        .lock()
        .expect("subscriber lock")
        .retain(|tx| tx.send(text.clone()).is_ok());
}

fn serve_connection(
    stream: TcpStream,
    static_dir: Option<&Path>,
    subscribers: Subscribers,
    commands: Sender<OperatorMessage>,
    drained: Arc<AtomicBool>,
) -> std::io::Result<()> {
    stream.set_nonblocking(false)?;
    stream.set_read_timeout(Some(Duration::from_secs(5)))?;
    let mut head = [0u8; 2048];
    let n = stream.peek(&mut head)?;
    let request = String::from_utf8_lossy(&head[..n]).to_ascii_lowercase();
    if request.contains("upgrade: websocket") {
        let ws = tungstenite::accept(stream).map_err(|e| std::io::Error::other(e.to_string()))?;
        ws.get_ref().set_read_timeout(Some(POLL))?;
        let (tx, rx) = unbounded();
        subscribers.lock().expect("subscriber lock").push(tx);
        websocket_loop(ws, rx, commands, drained);
        Ok(())
    } else {
        serve_static(stream, static_dir)
    }
}

fn websocket_loop(
    mut ws: WebSocket<TcpStream>,
    outgoing: Receiver<String>,
    commands: Sender<OperatorMessage>,
    drained: Arc<AtomicBool>,
) {
    loop {
        match ws.read() {
            Ok(Message::Text(text)) => match serde_json::from_str::<OperatorMessage>(text.as_str()) {
                Ok(msg) => {
                    if commands.send(msg).is_err() {
                        let _ = send_error(&mut ws, "session has ended");
                    }
                }
                Err(e) => {
                    if send_error(&mut ws, &format!("invalid message: {e}")).is_err() {
                        return;
                    }
                }
            },
            Ok(Message::Close(_)) => return,
            Ok(_) => {}
            Err(tungstenite::Error::Io(e))
                if matches!(e.kind(), std::io::ErrorKind::WouldBlock | std::io::ErrorKind::TimedOut) => {}
            Err(_) => return,
        }
        loop {
            match outgoing.try_recv() {
                Ok(text) => {
                    if ws.send(Message::text(text)).is_err() {
                        return;
                    }
                }
                Err(crossbeam::channel::TryRecvError::Empty) => break,
                Err(crossbeam::channel::TryRecvError::Disconnected) => {
                    let _ = ws.close(None);
                    let _ = ws.flush();
                    return;
                }
            }
        }
        if drained.load(Ordering::SeqCst) && outgoing.is_empty() {
            let _ = ws.close(None);
            let _ = ws.flush();
            return;
        }
    }
}

fn send_error(ws: &mut WebSocket<TcpStream>, message: &str) -> Result<(), Box<tungstenite::Error>> {
    let text = serde_json::to_string(&ConsoleMessage::Error {
        message: message.to_string(),
    })
    .expect("error message serialises");
    ws.send(Message::text(text)).map_err(Box::new)
}

fn serve_static(mut stream: TcpStream, static_dir: Option<&Path>) -> std::io::Result<()> {
    let mut buf = [0u8; 2048];
    let n = stream.read(&mut buf)?;
    let request = String::from_utf8_lossy(&buf[..n]);
    let target = request.lines().next().and_then(|l| l.split_whitespace().nth(1)).unwrap_or("/");
    let target = target.split(['?', '#']).next().unwrap_or("/");
    let rel = if target == "/" { "index.html" } else { target.trim_start_matches('/') };

    let file = static_dir.and_then(|dir| {
        let rel = Path::new(rel);
        // No escaping the static root.
        if rel.components().any(|c| !matches!(c, Component::Normal(_))) {
            return None;
        }
        std::fs::read(dir.join(rel)).ok().map(|body| (body, content_type(rel)))
    });
    match file {
        Some((body, ctype)) => {
            write!(
                stream,
                "HTTP/1.1 200 OK\r\nContent-Type: {ctype}\r\nContent-Length: {}\r\nConnection: close\r\n\r\n",
                body.len()
            )?;
            stream.write_all(&body)?;
        }
        None => {
            let body = b"not found\n";
            write!(
                stream,
                "HTTP/1.1 404 Not Found\r\nContent-Type: text/plain\r\nContent-Length: {}\r\nConnection: close\r\n\r\n",
                body.len()
            )?;
            stream.write_all(body)?;
        }
    }
    stream.flush()
}

fn content_type(path: &Path) -> &'static str {
    match path.extension().and_then(|e| e.to_str()) {
        Some("html") => "text/html; charset=utf-8",
        Some("js" | "mjs") => "text/javascript",
        Some("css") => "text/css",
        Some("json") => "application/json",
        Some("svg") => "image/svg+xml",
        Some("png") => "image/png",
        _ => "application/octet-stream",
    }
}
