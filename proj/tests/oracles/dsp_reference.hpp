// Copyright 2026 The residalign Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Generated by dsp_reference.py (librosa 0.11.0); do not edit.
#pragma once

namespace dsp_reference {

inline constexpr int kFrames = 98;
inline constexpr int kFrameIndex[] = {0, 1, 48, 97};
inline constexpr double kFbank[4][26] = {
    {-11.394803957651668, -9.580178087177188, -7.304530303586801, 1.1861666684598724, 4.660171910565122, 3.52778887581588, -5.583327257475795, -9.413148806825143, -11.695704009786374, -13.335569112581563, -14.707595107587672, -15.84719605748617, -16.760135641550523, -17.739844495776957, -18.52527429664942, -19.27683697764953, -20.000461074202526, -20.660968209978297, -21.343447477678417, -21.96321799951271, -22.6004017655821, -23.025850929940457, -23.025850929940457, -23.025850929940457, -23.025850929940457, -23.025850929940457},
    {-10.496594498034343, -9.41177075055049, -7.2477406219646365, 1.1862432879531295, 4.66016548170363, 3.5277999870731334, -5.58804802626724, -9.444816132902089, -11.774111457637817, -13.474043488113871, -14.91605842171429, -16.126665929813388, -17.109584098131688, -18.161424384875005, -19.00716758194153, -19.815256396789707, -20.588203192699204, -21.290917414672585, -22.00875556018945, -22.6566508270569, -23.025850929940457, -23.025850929940457, -23.025850929940457, -23.025850929940457, -23.025850929940457, -23.025850929940457},
    {-10.389806948322523, -9.38272636891828, -7.23729808725502, 1.1862578559175758, 4.66016425929856, 3.527802099782318, -5.5889481725335575, -9.45095258352554, -11.789741622016878, -13.502689932205001, -14.961131062494191, -16.189933155500835, -17.192459105724993, -18.266456827335706, -19.13241827930856, -19.961008540036616, -20.75319438058853, -21.473462610654018, -22.206842903441355, -22.867682065029346, -23.025850929940457, -23.025850929940457, -23.025850929940457, -23.025850929940457, -23.025850929940457, -23.025850929940457},
    {-10.13476025999345, -9.303810919941418, -7.207935839430127, 1.1862996415649738, 4.660160752937355, 3.5278081598637034, -5.591534661261858, -9.46876625277167, -11.835980192875045, -13.589728067577436, -15.102976364208384, -16.397375354688243, -17.477275209027063, -18.648693200180254, -19.614881064149838, -20.55899055323561, -21.475857583869736, -22.327837576812517, -23.025850929940457, -23.025850929940457, -23.025850929940457, -23.025850929940457, -23.025850929940457, -23.025850929940457, -23.025850929940457, -23.025850929940457},
};
inline constexpr double kMel[4][80] = {
    {-14.54889788301294, -13.402766874293091, -12.56364848971862, -11.698427625348849, -12.761111134223539, -12.639541525136861, -10.378006461145743, -9.053418397037174, -8.263879751453825, -8.161087730538929, -7.844699332010074, -4.537780933482601, -1.4405040212315852, 2.200239363210225, 3.9032239487198512, 4.1633327412631935, 2.9505965716245925, -0.3120439188218717, -4.840978639912025, -7.123855631629776, -7.429361934280356, -9.016601086336653, -11.370051028661166, -10.471910763734812, -11.6417529557257, -13.269580812992025, -12.608995685504349, -13.588161222962098, -14.547314995220017, -14.163804263234232, -15.657588710268499, -15.253117707765776, -15.852654699340167, -16.536715841381845, -16.33010616264716, -17.523692904309026, -17.010117451588133, -18.149723979640797, -17.63079347800739, -18.718482544801596, -18.341415931035552, -19.042949448985528, -19.0880298439401, -19.309982025262677, -19.890956434100918, -19.74905962285241, -20.23378259046808, -20.52102658065235, -20.551877804256524, -20.879986687353465, -21.231560363936623, -21.361704535558484, -21.508866891784848, -21.79420443849341, -22.056833215985222, -22.266642456035203, -22.462936493253064, -22.66973143770748, -22.867549764926487, -23.025850929940457, -23.025850929940457, -23.025850929940457, -23.025850929940457, -23.025850929940457, -23.025850929940457, -23.025850929940457, -23.025850929940457, -23.025850929940457, -23.025850929940457, -23.025850929940457, -23.025850929940457, -23.025850929940457, -23.025850929940457, -23.025850929940457, -23.025850929940457, -23.025850929940457, -23.025850929940457, -23.025850929940457, -23.025850929940457, -23.025850929940457},
    {-12.800993093349861, -12.120697954065191, -11.45549246783037, -11.023997971977328, -12.318472054791231, -12.344335926938932, -10.2286367214261, -8.946616538065962, -8.192312878685279, -8.117801548140303, -7.8346828991400566, -4.533132415631479, -1.439344011294904, 2.200242042882767, 3.903194062710411, 4.16334345067481, 2.9506317548218775, -0.31241878361818215, -4.842627936195519, -7.132275048197815, -7.442001547374632, -9.034691805413928, -11.40662108034874, -10.51582245948247, -11.6950125622544, -13.348030768820378, -12.700193542624046, -13.690796686692485, -14.684620956207002, -14.312889279227823, -15.823841516166459, -15.45185510894737, -16.06475956953236, -16.78642297320468, -16.592375120434397, -17.820849723252138, -17.32144030746414, -18.48940399750651, -17.989788983061974, -19.107578571050507, -18.744466877619026, -19.476069656245553, -19.532659843065353, -19.783357862594787, -20.378882372020826, -20.256610785187178, -20.764521292870185, -21.06385100413839, -21.112617671320315, -21.45996492049515, -21.824873716261912, -21.96755078389479, -22.129765731208906, -22.429467301630442, -22.704002223539028, -22.924471970623426, -23.025850929940457, -23.025850929940457, -23.025850929940457, -23.025850929940457, -23.025850929940457, -23.025850929940457, -23.025850929940457, -23.025850929940457, -23.025850929940457, -23.025850929940457, -23.025850929940457, -23.025850929940457, -23.025850929940457, -23.025850929940457, -23.025850929940457, -23.025850929940457, -23.025850929940457, -23.025850929940457, -23.025850929940457, -23.025850929940457, -23.025850929940457, -23.025850929940457, -23.025850929940457, -23.025850929940457},
    {-12.655135456290534, -11.991966081079916, -11.335610536301564, -10.934820160574978, -12.252678145568279, -12.296875667754543, -10.20259656198578, -8.92753894243484, -8.1792659769922, -8.109778861206914, -7.832789648641981, -4.532250974193105, -1.4391235961781519, 2.200242552401806, 3.903188380006161, 4.1633454869770254, 2.950638444505919, -0.31249007728330735, -4.8429418456755435, -7.133883989733024, -7.444423058369659, -9.038168962711438, -11.413728512205719, -10.52439461206648, -11.705468484727232, -13.363669812932962, -12.71851628799232, -13.71156283577449, -14.71300501144087, -14.343935814969951, -15.858838211923755, -15.494559135323675, -16.110726464138576, -16.841865743930448, -16.65108449738957, -17.888908403926298, -17.393415224026995, -18.56943504768129, -18.075478417183245, -19.20237355273807, -18.843606308402244, -19.584845987967896, -19.645227705763777, -19.905653418739995, -20.50624673715241, -20.390971927051933, -20.907393913838522, -21.21126838100859, -21.26691308515602, -21.621839333424923, -21.992122468090155, -22.13994327231366, -22.30845786453861, -22.61429801794999, -22.894017670656986, -23.025850929940457, -23.025850929940457, -23.025850929940457, -23.025850929940457, -23.025850929940457, -23.025850929940457, -23.025850929940457, -23.025850929940457, -23.025850929940457, -23.025850929940457, -23.025850929940457, -23.025850929940457, -23.025850929940457, -23.025850929940457, -23.025850929940457, -23.025850929940457, -23.025850929940457, -23.025850929940457, -23.025850929940457, -23.025850929940457, -23.025850929940457, -23.025850929940457, -23.025850929940457, -23.025850929940457, -23.025850929940457},
    {-12.326336987493242, -11.6944755706326, -11.05490956307467, -10.715906374010766, -12.084921217049226, -12.172046181216762, -10.131458369582592, -8.874753348600366, -8.14275978482306, -8.087117331480798, -7.827378841463891, -4.52972694500552, -1.4384916257224165, 2.20024401390748, 3.903172079528763, 4.163351327893995, 2.9506576329822343, -0.31269460460574233, -4.843842812344796, -7.138513500344804, -7.451401643390861, -9.048210466814647, -11.43440032536178, -10.54939872207777, -11.736081483583275, -13.409935480298563, -12.773016304855307, -13.773638800324775, -14.799198672356042, -14.438742080838338, -15.96660377481003, -15.62825687587448, -16.25567022382591, -17.02042264763883, -16.84157193245741, -18.114575618430305, -17.634295716872312, -18.842553738092437, -18.37204014241877, -19.538147534131163, -19.198776541069947, -19.984751943900807, -20.063421450509534, -20.372693862714225, -20.99991663834017, -20.92283967573123, -21.488173289909952, -21.81935852302222, -21.918058619713893, -22.323048696281898, -22.730660751641473, -22.915762447502836, -23.025850929940457, -23.025850929940457, -23.025850929940457, -23.025850929940457, -23.025850929940457, -23.025850929940457, -23.025850929940457, -23.025850929940457, -23.025850929940457, -23.025850929940457, -23.025850929940457, -23.025850929940457, -23.025850929940457, -23.025850929940457, -23.025850929940457, -23.025850929940457, -23.025850929940457, -23.025850929940457, -23.025850929940457, -23.025850929940457, -23.025850929940457, -23.025850929940457, -23.025850929940457, -23.025850929940457, -23.025850929940457, -23.025850929940457, -23.025850929940457, -23.025850929940457},
};
inline constexpr double kMfcc[4][13] = {
    {-75.20813890029491, 37.27562556841727, 6.007183900705201, -4.293824518108098, -9.076560581820623, -11.237176470379334, -8.619375252923273, -5.481652859581866, -1.4569724158155402, 1.620131997802739, 3.016176249191437, 3.3189043486500385, 2.2595684790472417},
    {-76.07319496860536, 38.09045610882585, 7.1342288773041105, -4.719191188925307, -8.628122851187118, -10.94149746340162, -8.5307498828696, -5.013638519519949, -1.4075614173175088, 1.8882027024585817, 3.221283325925909, 3.3787730620251417, 2.5178519457767354},
    {-76.31420765741584, 38.25600139850911, 7.392440742600147, -4.88543005707073, -8.554186383981708, -10.864292425743024, -8.575970222680727, -4.912482581926062, -1.4146903884187543, 1.8987326187353881, 3.283142644692675, 3.3462481478126205, 2.5636321020209447},
    {-77.18521981255772, 38.764802377461315, 8.341817220134235, -5.56119618647903, -8.442796760055417, -10.416125897868254, -8.875503138574658, -4.6790962567644225, -1.258623882820463, 1.7277665688638324, 3.5090877675796146, 3.343494994375615, 2.499243273936113},
};

}  // namespace dsp_reference
