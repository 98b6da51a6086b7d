//! WebSocket front end for a [`LiveSession`].
//!
//! Every connected client receives each frame as a JSON text message and may
//! send [`ClientMessage`](super::ClientMessage)s; rejected messages get an
//! `error` reply and change nothing.

use std::io::ErrorKind;
use std::net::{SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc::{Receiver, Sender, TryRecvError};
use std::sync::Arc;
use std::thread::JoinHandle;
use std::time::Duration;

use tungstenite::{Message, WebSocket};

use super::control::FrameRecord;
use super::live::LiveSession;
use super::wire::{error_reply, parse_client_message, ClientMessage};
use super::PipelineError;

const POLL: Duration = Duration::from_millis(5);

pub struct WsServer {
    addr: SocketAddr,
    stop: Arc<AtomicBool>,
    accept: Option<JoinHandle<()>>,
}

/// Binds `addr` and serves `session` until [`WsServer::shutdown`] or the
/// session ends.
pub fn serve(addr: impl ToSocketAddrs, session: &LiveSession) -> Result<WsServer, PipelineError> {
    let listener = TcpListener::bind(addr)?;
    listener.set_nonblocking(true)?;
    let addr = listener.local_addr()?;
    let stop = Arc::new(AtomicBool::new(false));
    let feed = session.feed();
    let commands = session.commands();
    let accept_stop = Arc::clone(&stop);
    let accept = std::thread::spawn(move || {
        let mut clients: Vec<JoinHandle<()>> = Vec::new();
        while !accept_stop.load(Ordering::Relaxed) {
            match listener.accept() {
                Ok((stream, peer)) => {
                    let frames = feed.subscribe();
                    let commands = commands.clone();
                    let stop = Arc::clone(&accept_stop);
                    clients.push(std::thread::spawn(move || {
                        if let Err(e) = serve_client(stream, frames, commands, &stop) {
                            log::info!("client {peer}: {e}");
                        }
                    }));
                }
                Err(e) if e.kind() == ErrorKind::WouldBlock => std::thread::sleep(POLL),
                Err(e) => {
                    log::warn!("accept failed: {e}");
                    std::thread::sleep(POLL);
                }
            }
            clients.retain(|c| !c.is_finished());
        }
        for client in clients {
            let _ = client.join();
        }
    });
    Ok(WsServer {
        addr,
        stop,
        accept: Some(accept),
    })
}

impl WsServer {
    pub fn local_addr(&self) -> SocketAddr {
        self.addr
    }

    /// Closes every connection and waits for the server threads.
    pub fn shutdown(mut self) {
        self.stop.store(true, Ordering::Relaxed);
        if let Some(accept) = self.accept.take() {
            let _ = accept.join();
        }
    }
}

impl Drop for WsServer {
    fn drop(&mut self) {
        self.stop.store(true, Ordering::Relaxed);
    }
}

fn is_timeout(e: &tungstenite::Error) -> bool {
    matches!(e, tungstenite::Error::Io(io) if matches!(io.kind(), ErrorKind::WouldBlock | ErrorKind::TimedOut))
}

fn serve_client(
    stream: TcpStream,
    frames: Receiver<Arc<FrameRecord>>,
    commands: Sender<ClientMessage>,
    stop: &AtomicBool,
) -> Result<(), tungstenite::Error> {
    stream.set_nonblocking(false)?;
    let mut ws: WebSocket<TcpStream> = tungstenite::accept(stream).map_err(|e| match e {
        tungstenite::HandshakeError::Failure(e) => e,
        tungstenite::HandshakeError::Interrupted(_) => {
            tungstenite::Error::Io(std::io::Error::new(ErrorKind::WouldBlock, "handshake interrupted"))
        }
    })?;
    ws.get_ref().set_read_timeout(Some(POLL))?;
    loop {
        if stop.load(Ordering::Relaxed) {
            let _ = ws.close(None);
            let _ = ws.flush();
            return Ok(());
        }
        match ws.read() {
            Ok(Message::Text(text)) => match parse_client_message(text.as_str()) {
                Ok(message) => {
                    if commands.send(message).is_err() {
                        return Ok(());
                    }
                }
                Err(e) => ws.send(Message::text(error_reply(&e.to_string(), text.as_str())))?,
            },
            Ok(Message::Binary(_)) => ws.send(Message::text(error_reply("binary messages are not supported", "")))?,
            Ok(Message::Close(_)) => return Ok(()),
            Ok(_) => {}
            Err(e) if is_timeout(&e) => {}
            Err(tungstenite::Error::ConnectionClosed | tungstenite::Error::AlreadyClosed) => return Ok(()),
            Err(e) => return Err(e),
        }
        loop {
            match frames.try_recv() {
                Ok(frame) => {
                    let json = serde_json::to_string(&*frame).expect("frame serializes");
                    ws.send(Message::text(json))?;
                }
                Err(TryRecvError::Empty) => break,
                Err(TryRecvError::Disconnected) => {
                    let _ = ws.close(None);
                    let _ = ws.flush();
                    return Ok(());
                }
            }
        }
    }
}
