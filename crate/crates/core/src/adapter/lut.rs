// SPDX-License-Identifier: Apache-2.0

use super::AdapterError;
use crate::topology::{compute_route, encode_route, MeshDims, SourceRoute};

pub const LUT_ENTRIES: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LutEntry {
    pub node: usize,
    /// Route from the owning master to `node`.
    pub route: SourceRoute,
    /// Route from `node` back to the owning master.
    pub return_route: SourceRoute,
}

/// Address-prefix to slave table held by a master adapter, indexed by the
/// top four address bits. Routes are precomputed so a lookup is a plain read.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RouteLut {
    owner: usize,
    entries: [Option<LutEntry>; LUT_ENTRIES],
}

impl RouteLut {
    pub fn build(dims: MeshDims, owner: usize, map: &[(u8, usize)]) -> Result<Self, AdapterError> {
        let own = dims.coord_of(owner)?;
        let mut entries = [None; LUT_ENTRIES];
        for &(prefix, node) in map {
            if prefix as usize >= LUT_ENTRIES {
                return Err(AdapterError::PrefixOutOfRange(prefix));
            }
            if node == owner {
                return Err(AdapterError::SelfTarget { prefix, node });
            }
            let dst = dims.coord_of(node)?;
            entries[prefix as usize] = Some(LutEntry {
                node,
                route: encode_route(&compute_route(own, dst)?)?,
                return_route: encode_route(&compute_route(dst, own)?)?,
            });
        }
        Ok(RouteLut { owner, entries })
    }

    pub fn owner(&self) -> usize {
        self.owner
    }

    pub fn lookup(&self, adr: u32) -> Result<LutEntry, AdapterError> {
        let prefix = (adr >> 28) as u8;
        self.entries[prefix as usize].ok_or(AdapterError::UnmappedPrefix(prefix))
    }
}

pub fn lut_lookup(lut: &RouteLut, adr: u32) -> Result<LutEntry, AdapterError> {
    lut.lookup(adr)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::Direction;

    fn lut() -> RouteLut {
        let dims = MeshDims::new(4, 4).unwrap();
        RouteLut::build(dims, 5, &[(0x3, 3), (0x0, 0)]).unwrap()
    }

    #[test]
    fn lookup_by_top_nibble() {
        let l = lut();
        let e = lut_lookup(&l, 0x3000_0010).unwrap();
        assert_eq!(e.node, 3);
        // (1,1) -> (3,0): E, E, N, then arrival port S
        assert_eq!(
            e.route.directions(),
            [
                Direction::East,
                Direction::East,
                Direction::North,
                Direction::South
            ]
        );
        assert_eq!(lut_lookup(&l, 0x0000_0000).unwrap().node, 0);
        assert_eq!(
            lut_lookup(&l, 0xF000_0000),
            Err(AdapterError::UnmappedPrefix(0xF))
        );
    }

    #[test]
    fn self_target_rejected() {
        let dims = MeshDims::new(2, 2).unwrap();
        assert!(matches!(
            RouteLut::build(dims, 1, &[(1, 1)]),
            Err(AdapterError::SelfTarget { .. })
        ));
    }
}
