// SPDX-License-Identifier: Apache-2.0

//! Mesh geometry and source routes.
//!
//! Routes are X-first minimal paths. Each hop is a 2-bit output port code
//! packed least-significant pair first into a 32-bit header word. The route
//! ends with the code of the port the packet arrives on at the destination;
//! a router that finds its own arrival port requested delivers locally.
//!
//! The origin is the top-left node and `y` grows southward.

use std::fmt;

use thiserror::Error;

pub const MAX_NODES: usize = 16;
pub const MAX_HOPS: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TopologyError {
    #[error("mesh must have at least one row and one column")]
    EmptyMesh,
    #[error("mesh exceeds {MAX_NODES} nodes ({cols}x{rows})")]
    MeshTooLarge { cols: usize, rows: usize },
    #[error("node index {index} out of range for a mesh of {nodes} nodes")]
    IndexOutOfRange { index: usize, nodes: usize },
    #[error("source and destination are the same node")]
    SameNode,
    #[error("route of {0} hops does not fit in the header")]
    RouteTooLong(usize),
    #[error("route must contain at least one hop")]
    EmptyRoute,
    #[error("local port cannot be encoded as a hop code")]
    LocalInRoute,
    #[error("malformed header: no hops left")]
    Malformed,
    #[error("packed route has bits set beyond hop {hops}")]
    StrayBits { hops: u8 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct MeshDims {
    cols: u8,
    rows: u8,
}

impl MeshDims {
    pub fn new(cols: usize, rows: usize) -> Result<Self, TopologyError> {
        if cols == 0 || rows == 0 {
            return Err(TopologyError::EmptyMesh);
        }
        if cols * rows > MAX_NODES {
            return Err(TopologyError::MeshTooLarge { cols, rows });
        }
        Ok(MeshDims {
            cols: cols as u8,
            rows: rows as u8,
        })
    }

    pub fn cols(&self) -> usize {
        self.cols as usize
    }

    pub fn rows(&self) -> usize {
        self.rows as usize
    }

    pub fn node_count(&self) -> usize {
        self.cols() * self.rows()
    }

    pub fn coord_of(&self, index: usize) -> Result<NodeCoord, TopologyError> {
        coord_of(index, *self)
    }

    pub fn index_of(&self, c: NodeCoord) -> usize {
        c.y as usize * self.cols() + c.x as usize
    }

    pub fn contains(&self, c: NodeCoord) -> bool {
        c.x < self.cols && c.y < self.rows
    }

    /// Neighbouring router through compass port `dir`, if it exists.
    pub fn neighbor(&self, c: NodeCoord, dir: Direction) -> Option<NodeCoord> {
        let (x, y) = (c.x as i32, c.y as i32);
        let (nx, ny) = match dir {
            Direction::North => (x, y - 1),
            Direction::South => (x, y + 1),
            Direction::East => (x + 1, y),
            Direction::West => (x - 1, y),
            Direction::Local => return None,
        };
        if nx < 0 || ny < 0 || nx >= self.cols as i32 || ny >= self.rows as i32 {
            return None;
        }
        Some(NodeCoord {
            x: nx as u8,
            y: ny as u8,
        })
    }

    pub fn coords(&self) -> impl Iterator<Item = NodeCoord> + '_ {
        (0..self.node_count()).map(|i| self.coord_of(i).unwrap())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeCoord {
    pub x: u8,
    pub y: u8,
}

impl NodeCoord {
    pub const fn new(x: u8, y: u8) -> Self {
        NodeCoord { x, y }
    }

    pub fn manhattan(&self, other: NodeCoord) -> usize {
        (self.x as i32 - other.x as i32).unsigned_abs() as usize
            + (self.y as i32 - other.y as i32).unsigned_abs() as usize
    }
}

impl fmt::Display for NodeCoord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.x, self.y)
    }
}

pub fn coord_of(node_index: usize, dims: MeshDims) -> Result<NodeCoord, TopologyError> {
    if node_index >= dims.node_count() {
        return Err(TopologyError::IndexOutOfRange {
            index: node_index,
            nodes: dims.node_count(),
        });
    }
    Ok(NodeCoord {
        x: (node_index % dims.cols()) as u8,
        y: (node_index / dims.cols()) as u8,
    })
}

/// Router port. The order of the variants is the fixed arbitration
/// priority for simultaneous requests.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Direction {
    North,
    East,
    South,
    West,
    Local,
}

impl Direction {
    pub const COMPASS: [Direction; 4] = [
        Direction::North,
        Direction::East,
        Direction::South,
        Direction::West,
    ];
    pub const ALL: [Direction; 5] = [
        Direction::North,
        Direction::East,
        Direction::South,
        Direction::West,
        Direction::Local,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    /// 2-bit hop code; `Local` has none.
    pub fn code(self) -> Option<u32> {
        match self {
            Direction::North => Some(0b00),
            Direction::East => Some(0b01),
            Direction::South => Some(0b10),
            Direction::West => Some(0b11),
            Direction::Local => None,
        }
    }

    pub fn from_code(code: u32) -> Direction {
        match code & 0b11 {
            0b00 => Direction::North,
            0b01 => Direction::East,
            0b10 => Direction::South,
            _ => Direction::West,
        }
    }

    pub fn opposite(self) -> Direction {
        match self {
            Direction::North => Direction::South,
            Direction::South => Direction::North,
            Direction::East => Direction::West,
            Direction::West => Direction::East,
            Direction::Local => Direction::Local,
        }
    }

    pub fn short(self) -> &'static str {
        match self {
            Direction::North => "N",
            Direction::East => "E",
            Direction::South => "S",
            Direction::West => "W",
            Direction::Local => "L",
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short())
    }
}

/// Packed per-hop route field.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct SourceRoute {
    packed: u32,
    hops: u8,
}

impl SourceRoute {
    pub const EMPTY: SourceRoute = SourceRoute { packed: 0, hops: 0 };

    pub fn new(packed: u32, hops: u8) -> Result<Self, TopologyError> {
        if hops as usize > MAX_HOPS {
            return Err(TopologyError::RouteTooLong(hops as usize));
        }
        if hops < 16 && packed >> (2 * hops as u32) != 0 {
            return Err(TopologyError::StrayBits { hops });
        }
        Ok(SourceRoute { packed, hops })
    }

    pub fn packed(&self) -> u32 {
        self.packed
    }

    pub fn hops(&self) -> u8 {
        self.hops
    }

    pub fn is_empty(&self) -> bool {
        self.hops == 0
    }

    /// The compass codes of all remaining hops, in order.
    pub fn directions(&self) -> Vec<Direction> {
        (0..self.hops as u32)
            .map(|k| Direction::from_code(self.packed >> (2 * k)))
            .collect()
    }
}

/// X-first minimal route from `src` to `dst`, terminated by the arrival port
/// at `dst`.
pub fn compute_route(src: NodeCoord, dst: NodeCoord) -> Result<Vec<Direction>, TopologyError> {
    if src == dst {
        return Err(TopologyError::SameNode);
    }
    let dx = dst.x as i32 - src.x as i32;
    let dy = dst.y as i32 - src.y as i32;
    let mut hops = Vec::with_capacity(src.manhattan(dst) + 1);
    let xdir = if dx > 0 {
        Direction::East
    } else {
        Direction::West
    };
    let ydir = if dy > 0 {
        Direction::South
    } else {
        Direction::North
    };
    hops.extend(std::iter::repeat_n(xdir, dx.unsigned_abs() as usize));
    hops.extend(std::iter::repeat_n(ydir, dy.unsigned_abs() as usize));
    let last = *hops.last().expect("src != dst");
    hops.push(last.opposite());
    Ok(hops)
}

pub fn encode_route(hops: &[Direction]) -> Result<SourceRoute, TopologyError> {
    if hops.is_empty() {
        return Err(TopologyError::EmptyRoute);
    }
    if hops.len() > MAX_HOPS {
        return Err(TopologyError::RouteTooLong(hops.len()));
    }
    let mut packed = 0u32;
    for (k, d) in hops.iter().enumerate() {
        let code = d.code().ok_or(TopologyError::LocalInRoute)?;
        packed |= code << (2 * k);
    }
    Ok(SourceRoute {
        packed,
        hops: hops.len() as u8,
    })
}

/// Decodes the next hop as a router does: the lowest pair names the output
/// port, unless it equals the arrival port, which means local delivery.
pub fn decode_next_hop(
    route: SourceRoute,
    arrived_from: Direction,
) -> Result<(Direction, SourceRoute), TopologyError> {
    if route.hops == 0 {
        return Err(TopologyError::Malformed);
    }
    let (out, rest) = decode_head_word(route.packed, arrived_from);
    Ok((
        out,
        SourceRoute {
            packed: rest,
            hops: route.hops - 1,
        },
    ))
}

/// Same rule applied to a raw header word, which carries no hop count.
pub fn decode_head_word(word: u32, arrived_from: Direction) -> (Direction, u32) {
    let code = word & 0b11;
    let out = match arrived_from.code() {
        Some(c) if c == code => Direction::Local,
        _ => Direction::from_code(code),
    };
    (out, word >> 2)
}
